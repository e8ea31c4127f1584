#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cardiomech/propagation_types.hpp"
#include "cardiomech/volume.hpp"

namespace cardiomech {

enum class ClassPreset { NOR, MINF, DCM, HCM, RV };

const char* preset_name(ClassPreset preset);
ClassPreset preset_from_name(const std::string& name);

// Analytic 4D phantom: a contracting, twisting thick-walled LV cylinder with
// an attached RV lune, textured with band-limited cosines. The frame-t
// configuration is a closed-form invertible map of the reference frame, so
// ground-truth fields and label transport are exact.
struct PhantomParams {
    std::array<int, 3> dims{64, 64, 64};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int frames = 10;

    // geometry, absolute mm
    std::array<double, 3> lv_center_mm{0.0, 0.0, 0.0};
    double lv_inner_radius_mm = 0.0;
    double lv_outer_radius_mm = 0.0;   // base wall; effective outer scales with wall_thickness_scale
    double rv_center_offset_mm = 0.0;  // along +x from the LV axis
    double rv_radius_mm = 0.0;
    double z_half_height_mm = 0.0;

    // motion; the half-cosine cycle peaks at ES = frames/2
    double contraction_amplitude = 0.25;
    double twist_amplitude_rad = 0.12;
    double rv_contraction_scale = 0.7;
    double defect_amplitude = 0.0;  // sector contraction reduction (MINF)
    double wall_thickness_scale = 1.0;

    // appearance
    double noise_sigma = 1.5;
    std::uint64_t texture_seed = 0x7001;
    ClassPreset preset = ClassPreset::NOR;

    int ed_index() const { return 0; }
    int es_index() const { return frames / 2; }
    double lv_outer_effective_mm() const {
        return lv_inner_radius_mm + (lv_outer_radius_mm - lv_inner_radius_mm) * wall_thickness_scale;
    }
    void validate() const;
};

// Geometry scaled to the grid extent, with room for every preset and jitter.
PhantomParams default_phantom_params(const std::array<int, 3>& dims,
                                     const std::array<double, 3>& spacing = {1.0, 1.0, 1.0},
                                     int frames = 10);

PhantomParams apply_preset(PhantomParams params, ClassPreset preset);

struct PhantomCase {
    std::string case_id;
    std::string class_label;
    PhantomParams params;
    CineSequence seq;
    std::vector<LabelMap3> frame_labels;  // exact transport of the reference six-label map
};

// Displacement field that warps frame t_from onto frame t_to's grid:
// u(x) = Psi_{t_from}(Psi_{t_to}^{-1}(x)) - x. Evaluable anywhere; exact.
DisplacementField3 analytic_field(const PhantomParams& params, int t_from, int t_to);

// The same field evaluated at one physical point.
std::array<double, 3> analytic_displacement(const PhantomParams& params, int t_from, int t_to,
                                            const std::array<double, 3>& point_mm);

PhantomCase generate_case(const PhantomParams& params, std::uint64_t seed);

// Balanced cohort over the five presets with seeded +-10% jitter on radii
// and amplitudes.
std::vector<PhantomCase> generate_cohort(int n_per_class, const PhantomParams& base_params,
                                         std::uint64_t seed);

} // namespace cardiomech
