#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cardiomech {

// The five disease-like categories, in canonical index order.
const std::vector<std::string>& class_names();
int class_index(const std::string& name);

struct Dataset {
    std::vector<std::string> case_ids;
    std::vector<int> labels;                  // indices into class_names()
    std::vector<std::vector<double>> x;       // cases x features
    std::vector<std::string> feature_names;

    std::size_t n_cases() const { return x.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    void validate() const;
    Dataset subset_features(const std::vector<int>& feature_indices) const;
    Dataset subset_cases(const std::vector<int>& case_indices) const;
};

struct LogRegHyper {
    double l2_weight = 1e-3;
    int max_iters = 400;
    double tol = 1e-5;  // gradient-norm stopping threshold
    std::uint64_t seed = 0;
};

// Multinomial logistic regression with per-feature standardization folded
// into the model. weights is classes x (features + 1); the bias is the last
// column.
struct LogRegModel {
    std::vector<std::string> classes;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> weights;
    std::vector<double> feat_mean;
    std::vector<double> feat_std;  // guarded to 1 for constant features
    LogRegHyper hyper;
};

// Full-batch gradient descent with backtracking on softmax cross-entropy
// plus l2_weight * ||W||^2 (bias excluded), from zero initialization.
LogRegModel train_logreg(const Dataset& train, const LogRegHyper& hyper);

struct Prediction {
    int class_idx = 0;
    std::vector<double> probabilities;
};

Prediction predict(const LogRegModel& model, const std::vector<double>& x);

// k nearest neighbours on standardized features (training statistics).
// Distance ties resolve by case order, vote ties toward the smaller class index.
int knn_classify(const Dataset& train, const std::vector<double>& x, int k);

// Rows are truth, columns predicted, over the full canonical class set.
std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& truth,
                                               const std::vector<int>& predicted, int n_classes);

struct ClassifierSpec {
    enum class Kind { LogReg, Knn } kind = Kind::LogReg;
    LogRegHyper logreg{};
    int knn_k = 5;
};

// Train on `train`, predict every row of `test`.
std::vector<int> fit_predict(const Dataset& train, const Dataset& test, const ClassifierSpec& spec);

struct CurvePoint {
    int size = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
};

// For each training-set size, draws `repeats` seeded stratified subsamples,
// trains on the subsample and evaluates on the held-out remainder. The full
// size has a single possible subset; its accuracy switches to 5-fold CV.
std::vector<CurvePoint> learning_curve(const Dataset& dataset, const std::vector<int>& sizes, int repeats,
                                       const ClassifierSpec& spec, std::uint64_t seed);

} // namespace cardiomech
