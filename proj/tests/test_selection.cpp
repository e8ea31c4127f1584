#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cardiomech/errors.hpp"
#include "cardiomech/rng.hpp"
#include "cardiomech/selection.hpp"

using namespace cardiomech;

namespace {

// 5-class dataset, n_per_class cases each; column 0 is a duplicate of the
// informative column 1, column 2 is seeded noise. Canonical order visits the
// duplicate first.
Dataset oracle_dataset(int n_per_class, std::uint64_t seed) {
    Dataset d;
    d.feature_names = {"dup_of_informative", "informative", "noise"};
    Rng rng(seed);
    for (int cls = 0; cls < 5; ++cls) {
        for (int c = 0; c < n_per_class; ++c) {
            const double info = 2.0 * cls + rng.uniform(-0.3, 0.3);
            const double noise = rng.normal(0.0, 1.0);
            d.case_ids.push_back("case_" + std::to_string(cls) + "_" + std::to_string(c));
            d.labels.push_back(cls);
            d.x.push_back({info, info, noise});
        }
    }
    return d;
}

ClassifierSpec logreg_spec() {
    ClassifierSpec spec;
    spec.logreg.max_iters = 200;
    return spec;
}

} // namespace

TEST_CASE("evaluate_accuracy is 1 on separable data and 0 on the empty subset") {
    const Dataset d = oracle_dataset(6, 11);
    const CvSpec cv;
    CHECK(evaluate_accuracy(d, {1}, logreg_spec(), cv, 5) == doctest::Approx(1.0));
    CHECK(evaluate_accuracy(d, {0, 1}, logreg_spec(), cv, 5) == doctest::Approx(1.0));
    CHECK(evaluate_accuracy(d, {0, 1, 2}, logreg_spec(), cv, 5) >= 0.8);  // the noise column costs a little
    CHECK(evaluate_accuracy(d, {}, logreg_spec(), cv, 5) == 0.0);
}

TEST_CASE("evaluate_accuracy errors when a class has fewer cases than folds") {
    const Dataset d = oracle_dataset(3, 13);
    CHECK_THROWS_AS(evaluate_accuracy(d, {1}, logreg_spec(), CvSpec{5}, 1), ValidationError);
}

TEST_CASE("shuffled labels score near chance") {
    double mean = 0.0;
    const int n_seeds = 5;
    for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
        Dataset d = oracle_dataset(6, 17 + seed);
        Rng rng(seed * 7919 + 1);
        rng.shuffle(d.labels);
        mean += evaluate_accuracy(d, {0, 1, 2}, logreg_spec(), CvSpec{5}, seed);
    }
    mean /= n_seeds;
    CHECK(mean > 0.02);
    CHECK(mean < 0.45);
}

TEST_CASE("a constant feature cannot beat the majority-class rate") {
    Dataset d = oracle_dataset(6, 19);
    for (auto& row : d.x) row[2] = 1.0;
    const double acc = evaluate_accuracy(d, {2}, logreg_spec(), CvSpec{5}, 3);
    CHECK(acc <= 0.2 + 1e-9);
}

TEST_CASE("selection oracle: duplicate and noise discarded, informative retained") {
    const Dataset d = oracle_dataset(6, 23);
    const CvSpec cv;
    const std::uint64_t seed = 5;
    const SelectionResult res = select_features(d, logreg_spec(), cv, seed);

    CHECK(res.selected == std::vector<std::string>{"informative"});
    CHECK(res.discarded == std::vector<std::string>{"dup_of_informative", "noise"});

    // exhaustive oracle over all 2^3 subsets
    double best = 0.0;
    std::size_t best_size = 99;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> subset;
        for (int f = 0; f < 3; ++f)
            if (mask & (1 << f)) subset.push_back(f);
        const double acc = evaluate_accuracy(d, subset, logreg_spec(), cv, seed);
        if (acc > best + 1e-12) {
            best = acc;
            best_size = subset.size();
        } else if (std::fabs(acc - best) <= 1e-12 && subset.size() < best_size && !subset.empty()) {
            best_size = subset.size();
        }
    }
    CHECK(res.acc_max == doctest::Approx(best));
    CHECK(res.selected.size() == best_size);

    // re-evaluating the selected subset reproduces acc_max exactly
    std::vector<int> selected_idx;
    for (const std::string& name : res.selected) {
        const auto it = std::find(d.feature_names.begin(), d.feature_names.end(), name);
        selected_idx.push_back(static_cast<int>(it - d.feature_names.begin()));
    }
    CHECK(evaluate_accuracy(d, selected_idx, logreg_spec(), cv, seed) == res.acc_max);
}

TEST_CASE("acc_max is non-decreasing along the trace") {
    const Dataset d = oracle_dataset(6, 29);
    const SelectionResult res = select_features(d, logreg_spec(), CvSpec{}, 7);
    double acc = 0.0;
    for (const SelectionTraceEntry& t : res.trace) {
        if (t.action == "removed" || t.action == "readded") {
            CHECK(t.accuracy >= acc - 1e-12);
            acc = std::max(acc, t.accuracy);
        }
    }
    // partition property
    std::vector<std::string> all = res.selected;
    all.insert(all.end(), res.discarded.begin(), res.discarded.end());
    std::sort(all.begin(), all.end());
    std::vector<std::string> names = d.feature_names;
    std::sort(names.begin(), names.end());
    CHECK(all == names);
}

TEST_CASE("the guard never empties the working set") {
    // two features: one informative, one noise; the informative one survives
    Dataset d = oracle_dataset(6, 31);
    d = d.subset_features({1, 2});
    const SelectionResult res = select_features(d, logreg_spec(), CvSpec{}, 9);
    CHECK(res.selected == std::vector<std::string>{"informative"});
    CHECK(res.discarded == std::vector<std::string>{"noise"});
}

TEST_CASE("an already-optimal set sees zero removals and one kept-sweep") {
    // four classes encoded jointly by two features; each removal strictly hurts
    Dataset d;
    d.feature_names = {"axis_a", "axis_b"};
    Rng rng(37);
    for (int cls = 0; cls < 4; ++cls) {
        for (int c = 0; c < 6; ++c) {
            const double a = (cls & 1 ? 1.0 : -1.0) + rng.uniform(-0.15, 0.15);
            const double b = (cls & 2 ? 1.0 : -1.0) + rng.uniform(-0.15, 0.15);
            d.case_ids.push_back("c" + std::to_string(cls * 6 + c));
            d.labels.push_back(cls);
            d.x.push_back({a, b});
        }
    }
    const SelectionResult res = select_features(d, logreg_spec(), CvSpec{}, 11);
    CHECK(res.selected.size() == 2);
    CHECK(res.discarded.empty());
    CHECK(res.trace.size() == 2);  // one full forward sweep, everything kept
    for (const auto& t : res.trace) CHECK(t.action == "kept");
}

TEST_CASE("selection is deterministic") {
    const Dataset d = oracle_dataset(6, 41);
    const SelectionResult a = select_features(d, logreg_spec(), CvSpec{}, 13);
    const SelectionResult b = select_features(d, logreg_spec(), CvSpec{}, 13);
    CHECK(a.selected == b.selected);
    CHECK(a.acc_max == b.acc_max);
    CHECK(a.trace.size() == b.trace.size());
}

TEST_CASE("select_features needs at least two features") {
    Dataset d = oracle_dataset(6, 43).subset_features({1});
    CHECK_THROWS_AS(select_features(d, logreg_spec(), CvSpec{}, 1), ValidationError);
}
