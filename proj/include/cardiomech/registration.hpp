#pragma once

#include <cstdint>
#include <vector>

#include "cardiomech/kinematics.hpp"
#include "cardiomech/similarity.hpp"
#include "cardiomech/volume.hpp"

namespace cardiomech {

// One multi-resolution optimization stage.
struct RegStage {
    int scale_factor = 1;
    int iterations = 100;
    double step_size = 0.3;  // mm, adaptive-moment step scale
};

// Full registration configuration. Serialized as JSON with these exact
// field names; see pipeline_config.
struct RegConfig {
    std::vector<RegStage> stages{{4, 150, 1.2}, {2, 120, 0.6}, {1, 100, 0.3}};
    double lambda = 0.1;
    MaterialParams material{};
    SimConfig sim{};
    double field_smoothing_sigma_mm = 4.0;
    std::uint64_t seed = 0;
    double convergence_tol = 1e-6;

    void validate() const;
};

struct StageLoss {
    double l_sim = 0.0;
    double l_nhe = 0.0;
    double l = 0.0;
};

struct RegResult {
    DisplacementField3 field;  // accumulated displacement at full resolution
    std::vector<StageLoss> per_stage_losses;
    double fold_fraction = 0.0;  // voxels with J <= 0
    std::vector<int> iterations_used;
    std::vector<std::vector<double>> loss_trace;  // accepted losses per stage
};

// Minimizes L = L_sim + lambda * L_nhe over the accumulated field, one
// incremental field per stage, coarse to fine. Earlier increments are
// upsampled and frozen; the moving image is warped once by the accumulated
// field at each evaluation.
RegResult register_pair(const Volume3& fixed, const Volume3& moving, const RegConfig& cfg);

// Total loss and its analytic gradient with respect to the increment's
// displacement components, at the given stage resolution.
StageLoss loss_and_gradient(const Volume3& fixed, const Volume3& moving,
                            const DisplacementField3& accumulated_field,
                            const DisplacementField3& increment, const RegConfig& cfg,
                            DisplacementField3& gradient);

enum class LossTerm { Similarity, Energy, Total };

// Compares the analytic gradient against central finite differences of the
// loss at randomly probed components. Returns the max relative error over
// probes whose magnitudes exceed the small-gradient threshold.
double gradient_check(const RegConfig& cfg, int grid_size, int probes, double eps,
                      LossTerm term = LossTerm::Total);

} // namespace cardiomech
