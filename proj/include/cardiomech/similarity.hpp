#pragma once

#include <vector>

#include "cardiomech/volume.hpp"

namespace cardiomech {

// Multi-scale local cross-correlation settings. Window sizes are cube edge
// lengths in voxels, each odd and >= 3.
struct SimConfig {
    std::vector<int> windows{9, 5, 3};
    double variance_eps = 1e-5;

    void validate() const;
};

// Squared local normalized cross-correlation over the window centred at each
// voxel, truncated at boundaries. Constant windows score 0 via the eps guard.
Volume3 lncc_map(const Volume3& fixed, const Volume3& warped, int window, double eps);

// L_sim = -(1/|windows|) * sum_w mean_p lncc_map(fixed, warped, w). In [-1, 0].
double similarity_loss(const Volume3& fixed, const Volume3& warped, const SimConfig& cfg);

// Loss plus dL_sim / d warped(p), assembled from box-filtered window statistics.
double similarity_loss_and_grad(const Volume3& fixed, const Volume3& warped, const SimConfig& cfg,
                                Volume3& grad_warped);

// Sum over the truncated cube window (edge 2*radius+1) centred at each voxel.
std::vector<double> box_sum(const std::vector<double>& src, const GridSpec& grid, int radius);

} // namespace cardiomech
