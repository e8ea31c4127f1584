#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cardiomech/classify.hpp"

namespace cardiomech {

struct CvSpec {
    int folds = 5;
};

struct SelectionTraceEntry {
    int step = 0;
    std::string feature;
    std::string action;  // "removed", "kept", "readded"
    double accuracy = 0.0;
};

struct SelectionResult {
    std::vector<std::string> selected;   // canonical order
    std::vector<std::string> discarded;  // canonical order
    double acc_max = 0.0;
    std::vector<SelectionTraceEntry> trace;
};

// Stratified k-fold cross-validation accuracy of the classifier on the given
// feature subset. Folds depend only on the dataset and seed, so subset scores
// are comparable. Features are standardized from training folds only (inside
// the classifier). The empty subset scores 0 by definition.
double evaluate_accuracy(const Dataset& dataset, const std::vector<int>& feature_subset,
                         const ClassifierSpec& classifier, const CvSpec& cv, std::uint64_t seed);

double cross_validated_accuracy(const Dataset& dataset, const ClassifierSpec& spec, int folds,
                                std::uint64_t seed);

// Greedy forward-backward wrapper selection. The forward phase removes a
// feature when accuracy without it is >= the best seen (starting from the
// full-set accuracy); the backward phase re-adds a discarded feature only on
// strict improvement. Each phase sweeps in canonical feature order and
// repeats while the best accuracy strictly improved in the last sweep. The
// working set is never emptied.
SelectionResult select_features(const Dataset& dataset, const ClassifierSpec& classifier, const CvSpec& cv,
                                std::uint64_t seed);

} // namespace cardiomech
