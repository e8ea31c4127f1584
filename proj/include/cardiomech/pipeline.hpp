#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cardiomech/features.hpp"
#include "cardiomech/phantom.hpp"
#include "cardiomech/pipeline_config.hpp"
#include "cardiomech/propagation_types.hpp"

namespace cardiomech {

// A case loaded from a cohort directory.
struct LoadedCase {
    std::string case_id;
    std::string class_label;
    CineSequence seq;
};

// Case directory layout: manifest.json plus one .vol file per frame and the
// ED/ES label maps.
void write_case_dir(const std::filesystem::path& dir, const PhantomCase& c);
LoadedCase read_case_dir(const std::filesystem::path& dir);

// Every subdirectory with a manifest.json, in lexicographic order.
std::vector<std::filesystem::path> list_case_dirs(const std::filesystem::path& cohort_dir);

// The per-phase maps the feature grid consumes: registration-derived motion
// at the phase, its local moduli, and the displacement magnitude.
PhaseMaps compute_phase_maps(const CineSequence& seq, CardiacPhase phase, const PipelineConfig& cfg);

FeatureVector compute_case_features(const std::string& case_id, const std::string& class_label,
                                    const CineSequence& seq, const PipelineConfig& cfg);

} // namespace cardiomech
