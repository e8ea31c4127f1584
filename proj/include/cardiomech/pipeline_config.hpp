#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cardiomech/classify.hpp"
#include "cardiomech/registration.hpp"
#include "cardiomech/selection.hpp"

namespace cardiomech {

// Classifier and cross-validation settings as they appear in config files.
struct SelectionSpec {
    int cv_folds = 5;
    std::string classifier = "logreg";  // "logreg" or "knn"
    double l2_weight = 1e-3;
    int max_iters = 400;
    double tol = 1e-5;
    int knn_k = 5;

    ClassifierSpec to_classifier_spec(std::uint64_t seed) const;
    CvSpec to_cv_spec() const;
    void validate() const;
};

// The one JSON document driving the whole pipeline. Parsing rejects unknown
// keys; serialization writes every field so defaults are explicit on disk.
struct PipelineConfig {
    RegConfig registration{};
    int moduli_window = 5;
    double energy_floor = 1e-8;
    int lwv_window = 5;
    int n_adjacent = 2;
    SelectionSpec selection{};
    std::uint64_t seed = 0;

    void validate() const;
};

std::string pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& text);

// Missing path -> defaults.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig default_pipeline_config();

std::string reg_result_to_json(const RegResult& result);

std::string selection_result_to_json(const SelectionResult& result);
SelectionResult selection_result_from_json(const std::string& text);

std::string logreg_model_to_json(const LogRegModel& model);
LogRegModel logreg_model_from_json(const std::string& text);

} // namespace cardiomech
