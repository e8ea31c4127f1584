#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace cardiomech {

// Axis-aligned voxel grid. Voxel (i,j,k) sits at origin + spacing * index,
// in millimetres. Data arrays are x-fastest: index = i + nx*(j + ny*k).
struct GridSpec {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
    }

    std::array<double, 3> position(int i, int j, int k) const {
        return {origin[0] + spacing[0] * i, origin[1] + spacing[1] * j, origin[2] + spacing[2] * k};
    }

    // Physical point -> continuous voxel coordinate along one axis.
    double to_voxel(double x_mm, int axis) const { return (x_mm - origin[axis]) / spacing[axis]; }

    bool same_as(const GridSpec& other, double rel_tol = 1e-9) const;
    void validate(const char* what) const;
};

// Scalar 3D image, float32 on disk, double in memory.
struct Volume3 {
    GridSpec grid;
    std::vector<double> data;

    Volume3() = default;
    explicit Volume3(const GridSpec& g, double fill = 0.0) : grid(g), data(g.voxel_count(), fill) {}

    double& at(int i, int j, int k) { return data[grid.index(i, j, k)]; }
    double at(int i, int j, int k) const { return data[grid.index(i, j, k)]; }
};

// Per-voxel displacement u(x) in mm, component-interleaved (ux, uy, uz).
// The warp it induces is phi(x) = x + u(x).
struct DisplacementField3 {
    GridSpec grid;
    std::vector<double> data;

    DisplacementField3() = default;
    explicit DisplacementField3(const GridSpec& g, double fill = 0.0)
        : grid(g), data(3 * g.voxel_count(), fill) {}

    double& at(int i, int j, int k, int c) { return data[3 * grid.index(i, j, k) + c]; }
    double at(int i, int j, int k, int c) const { return data[3 * grid.index(i, j, k) + c]; }
};

// Integer labels, 0 = background.
struct LabelMap3 {
    GridSpec grid;
    std::vector<std::uint8_t> data;

    LabelMap3() = default;
    explicit LabelMap3(const GridSpec& g, std::uint8_t fill = 0) : grid(g), data(g.voxel_count(), fill) {}

    std::uint8_t& at(int i, int j, int k) { return data[grid.index(i, j, k)]; }
    std::uint8_t at(int i, int j, int k) const { return data[grid.index(i, j, k)]; }
};

// Per-voxel 3x3 tensor, row-major.
struct TensorField3 {
    GridSpec grid;
    std::vector<double> data;

    TensorField3() = default;
    explicit TensorField3(const GridSpec& g) : grid(g), data(9 * g.voxel_count(), 0.0) {}

    double& at(std::size_t voxel, int row, int col) { return data[9 * voxel + 3 * row + col]; }
    double at(std::size_t voxel, int row, int col) const { return data[9 * voxel + 3 * row + col]; }
};

// Trilinear interpolation at a physical point; coordinates clamp to the edge.
double trilinear_sample(const Volume3& vol, const std::array<double, 3>& point_mm);

// Trilinear value plus its spatial gradient (d value / d point_mm). The
// gradient is zero along axes where the sample point is clamped outside.
void trilinear_sample_grad(const Volume3& vol, const std::array<double, 3>& point_mm, double& value,
                           std::array<double, 3>& grad);

// out(p) = vol(x_p + u(p)), trilinear.
Volume3 warp_volume(const Volume3& vol, const DisplacementField3& field);

// Nearest-neighbour label warp; .5 ties round toward the lower index.
LabelMap3 warp_labels(const LabelMap3& labels, const DisplacementField3& field);

// Block-average pooling by an integer factor; partial blocks average the
// voxels they actually cover. Spacing scales by the factor and the origin
// shifts to keep block centres aligned.
Volume3 downsample(const Volume3& vol, int factor);
GridSpec downsample_grid(const GridSpec& grid, int factor);

// Componentwise trilinear resample of a displacement field onto target_grid.
// Displacements are physical (mm), so values transfer without rescaling.
DisplacementField3 upsample_field(const DisplacementField3& field, const GridSpec& target_grid);

// Voxelwise vector sum over fields sharing one grid.
DisplacementField3 accumulate_fields(const std::vector<DisplacementField3>& fields);

// Separable Gaussian smoothing of each displacement component, sigma in mm.
// Kernels renormalize at the boundary so constants pass through unchanged.
DisplacementField3 gaussian_smooth_field(const DisplacementField3& field, double sigma_mm);

DisplacementField3 scale_field(const DisplacementField3& field, double factor);
DisplacementField3 add_fields(const DisplacementField3& a, const DisplacementField3& b);

} // namespace cardiomech
