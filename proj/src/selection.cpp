#include "cardiomech/selection.hpp"

#include <algorithm>
#include <map>

#include "cardiomech/errors.hpp"
#include "cardiomech/rng.hpp"

namespace cardiomech {

namespace {

// Fold assignment per case: classes dealt round-robin after a seeded
// within-class shuffle. Depends on the dataset rows and seed only.
std::vector<int> fold_assignment(const Dataset& data, int folds, std::uint64_t seed) {
    const int n_classes = static_cast<int>(class_names().size());
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t c = 0; c < data.n_cases(); ++c)
        by_class[static_cast<std::size_t>(data.labels[c])].push_back(static_cast<int>(c));

    std::vector<int> fold_of(data.n_cases(), -1);
    Rng rng(seed ^ 0xd1b54a32d192ed03ull);
    for (int k = 0; k < n_classes; ++k) {
        auto& members = by_class[static_cast<std::size_t>(k)];
        if (members.empty()) continue;
        if (static_cast<int>(members.size()) < folds)
            throw ValidationError("evaluate_accuracy: class '" + class_names()[static_cast<std::size_t>(k)] +
                                  "' has fewer cases than folds");
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold_of[static_cast<std::size_t>(members[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
    return fold_of;
}

double cv_accuracy_on(const Dataset& data, const ClassifierSpec& spec, int folds, std::uint64_t seed) {
    const std::vector<int> fold_of = fold_assignment(data, folds, seed);
    // folds are independent; integer tallies keep the result thread-count invariant
    std::vector<int> correct(static_cast<std::size_t>(folds), 0), total(static_cast<std::size_t>(folds), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train_idx, test_idx;
        for (std::size_t c = 0; c < data.n_cases(); ++c)
            (fold_of[c] == f ? test_idx : train_idx).push_back(static_cast<int>(c));
        if (test_idx.empty()) continue;
        const Dataset train = data.subset_cases(train_idx);
        const Dataset test = data.subset_cases(test_idx);
        const std::vector<int> pred = fit_predict(train, test, spec);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == test.labels[i]) ++correct[static_cast<std::size_t>(f)];
            ++total[static_cast<std::size_t>(f)];
        }
    }
    int c_sum = 0, t_sum = 0;
    for (int f = 0; f < folds; ++f) {
        c_sum += correct[static_cast<std::size_t>(f)];
        t_sum += total[static_cast<std::size_t>(f)];
    }
    return t_sum > 0 ? static_cast<double>(c_sum) / static_cast<double>(t_sum) : 0.0;
}

} // namespace

double cross_validated_accuracy(const Dataset& dataset, const ClassifierSpec& spec, int folds,
                                std::uint64_t seed) {
    dataset.validate();
    if (folds < 2) throw ValidationError("cross_validated_accuracy: folds must be >= 2");
    return cv_accuracy_on(dataset, spec, folds, seed);
}

double evaluate_accuracy(const Dataset& dataset, const std::vector<int>& feature_subset,
                         const ClassifierSpec& classifier, const CvSpec& cv, std::uint64_t seed) {
    dataset.validate();
    if (feature_subset.empty()) return 0.0;
    if (cv.folds < 2) throw ValidationError("evaluate_accuracy: folds must be >= 2");
    const Dataset sub = dataset.subset_features(feature_subset);
    return cv_accuracy_on(sub, classifier, cv.folds, seed);
}

SelectionResult select_features(const Dataset& dataset, const ClassifierSpec& classifier, const CvSpec& cv,
                                std::uint64_t seed) {
    dataset.validate();
    const int d = static_cast<int>(dataset.n_features());
    if (d < 2) throw ValidationError("select_features: need at least 2 features");

    std::vector<char> in_set(static_cast<std::size_t>(d), 1);
    auto current_subset = [&]() {
        std::vector<int> s;
        for (int f = 0; f < d; ++f)
            if (in_set[static_cast<std::size_t>(f)]) s.push_back(f);
        return s;
    };

    SelectionResult res;
    res.acc_max = evaluate_accuracy(dataset, current_subset(), classifier, cv, seed);
    int step = 0;

    // Forward phase: sweep removals in canonical order, accept on acc >= acc_max.
    bool improved = true;
    while (improved) {
        const double sweep_start = res.acc_max;
        for (int f = 0; f < d; ++f) {
            if (!in_set[static_cast<std::size_t>(f)]) continue;
            in_set[static_cast<std::size_t>(f)] = 0;
            const std::vector<int> subset = current_subset();
            double acc = 0.0;
            bool accept = false;
            if (!subset.empty()) {
                acc = evaluate_accuracy(dataset, subset, classifier, cv, seed);
                accept = acc >= res.acc_max;
            }
            ++step;
            if (accept) {
                res.acc_max = acc;
                res.trace.push_back({step, dataset.feature_names[static_cast<std::size_t>(f)], "removed", acc});
            } else {
                in_set[static_cast<std::size_t>(f)] = 1;
                res.trace.push_back({step, dataset.feature_names[static_cast<std::size_t>(f)], "kept", acc});
            }
        }
        improved = res.acc_max > sweep_start;
    }

    // Backward phase: sweep re-additions of discarded features, accept only
    // on strict improvement.
    improved = true;
    while (improved) {
        const double sweep_start = res.acc_max;
        for (int f = 0; f < d; ++f) {
            if (in_set[static_cast<std::size_t>(f)]) continue;
            in_set[static_cast<std::size_t>(f)] = 1;
            const double acc = evaluate_accuracy(dataset, current_subset(), classifier, cv, seed);
            ++step;
            if (acc > res.acc_max) {
                res.acc_max = acc;
                res.trace.push_back({step, dataset.feature_names[static_cast<std::size_t>(f)], "readded", acc});
            } else {
                in_set[static_cast<std::size_t>(f)] = 0;
                res.trace.push_back({step, dataset.feature_names[static_cast<std::size_t>(f)], "kept", acc});
            }
        }
        improved = res.acc_max > sweep_start;
    }

    for (int f = 0; f < d; ++f) {
        (in_set[static_cast<std::size_t>(f)] ? res.selected : res.discarded)
            .push_back(dataset.feature_names[static_cast<std::size_t>(f)]);
    }
    return res;
}

} // namespace cardiomech
