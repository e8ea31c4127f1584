#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "cardiomech/classify.hpp"
#include "cardiomech/volume.hpp"

namespace cardiomech {

// Feature names render as value_label_stat_phase, e.g. "mu_3_p10_ES",
// "phimag_1_3_ratio_ED", "vol_2_total_ratio_ES", "kappa_4_ratio_EDoverES".
struct FeatureName {
    std::string value;                 // mu | kappa | phimag | vol
    std::vector<std::string> labels;   // one of "1".."6"/"total", or a pair
    std::string stat;                  // mean | std | p10 | p90 | ratio
    std::string phase;                 // ED | ES | EDoverES

    std::string render() const;
    static FeatureName parse(const std::string& name);
};

// The fixed 312-entry enumeration all feature tables follow.
const std::vector<std::string>& canonical_feature_names();

struct RegionStats {
    double mean = 0.0;
    double std_dev = 0.0;  // population
    double p10 = 0.0;      // linear interpolation at rank q*(n-1)
    double p90 = 0.0;
};

RegionStats region_stats(const Volume3& map, const LabelMap3& labels, int label);

// Per-voxel Euclidean norm of the displacement, in mm.
Volume3 field_magnitude(const DisplacementField3& field);

// Voxel count times voxel volume, in ml.
double label_volume(const LabelMap3& labels, int label);

// The maps a case provides at one cardiac phase.
struct PhaseMaps {
    Volume3 mu_map;
    Volume3 kappa_map;
    Volume3 phimag;
    LabelMap3 labels;
};

struct FeatureVector {
    std::string case_id;
    std::string class_label;
    std::vector<std::string> names;   // canonical order
    std::vector<double> values;
    std::vector<std::string> warnings;  // guarded divisions
};

FeatureVector extract_features(const std::string& case_id, const std::string& class_label,
                               const PhaseMaps& ed, const PhaseMaps& es);

// Derives the six-label map from LV-cavity, myocardium and RV-cavity masks:
// 3 = LV cavity, 5 = RV cavity, 4 = myocardium within 2 voxels of the RV
// cavity, 1/2 = remaining myocardium split by the sagittal plane through the
// LV-cavity centroid (1 on the RV side), 6 = 3-voxel dilation shell of the
// union.
LabelMap3 split_acdc_labels(const LabelMap3& lv_cavity, const LabelMap3& myocardium,
                            const LabelMap3& rv_cavity);

// Feature-table CSV: header "case_id,class,<312 names>", one row per case.
void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureVector>& rows);
Dataset read_feature_csv(const std::filesystem::path& path);
Dataset dataset_from_features(const std::vector<FeatureVector>& rows);

} // namespace cardiomech
