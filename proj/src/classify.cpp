#include "cardiomech/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cardiomech/errors.hpp"
#include "cardiomech/rng.hpp"

namespace cardiomech {

const std::vector<std::string>& class_names() {
    static const std::vector<std::string> names = {"NOR", "MINF", "DCM", "HCM", "RV"};
    return names;
}

int class_index(const std::string& name) {
    const auto& names = class_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown class '" + name + "'");
}

void Dataset::validate() const {
    if (x.size() != labels.size() || x.size() != case_ids.size())
        throw ValidationError("Dataset: case_ids, labels and rows must align");
    for (const auto& row : x) {
        if (row.size() != feature_names.size()) throw ValidationError("Dataset: ragged feature rows");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite feature value");
        }
    }
    for (int l : labels) {
        if (l < 0 || l >= static_cast<int>(class_names().size()))
            throw ValidationError("Dataset: label outside the declared class set");
    }
}

Dataset Dataset::subset_features(const std::vector<int>& feature_indices) const {
    Dataset out;
    out.case_ids = case_ids;
    out.labels = labels;
    for (int f : feature_indices) out.feature_names.push_back(feature_names.at(static_cast<std::size_t>(f)));
    out.x.reserve(x.size());
    for (const auto& row : x) {
        std::vector<double> r;
        r.reserve(feature_indices.size());
        for (int f : feature_indices) r.push_back(row[static_cast<std::size_t>(f)]);
        out.x.push_back(std::move(r));
    }
    return out;
}

Dataset Dataset::subset_cases(const std::vector<int>& case_indices) const {
    Dataset out;
    out.feature_names = feature_names;
    for (int c : case_indices) {
        out.case_ids.push_back(case_ids.at(static_cast<std::size_t>(c)));
        out.labels.push_back(labels.at(static_cast<std::size_t>(c)));
        out.x.push_back(x.at(static_cast<std::size_t>(c)));
    }
    return out;
}

namespace {

void standardization_stats(const std::vector<std::vector<double>>& x, std::vector<double>& mean,
                           std::vector<double>& sd) {
    const std::size_t n = x.size(), d = x.empty() ? 0 : x[0].size();
    mean.assign(d, 0.0);
    sd.assign(d, 0.0);
    for (const auto& row : x)
        for (std::size_t f = 0; f < d; ++f) mean[f] += row[f];
    for (std::size_t f = 0; f < d; ++f) mean[f] /= static_cast<double>(n);
    for (const auto& row : x)
        for (std::size_t f = 0; f < d; ++f) sd[f] += (row[f] - mean[f]) * (row[f] - mean[f]);
    for (std::size_t f = 0; f < d; ++f) {
        sd[f] = std::sqrt(sd[f] / static_cast<double>(n));
        if (!(sd[f] > 1e-12)) sd[f] = 1.0;  // constant feature guard
    }
}

std::vector<double> standardize_row(const std::vector<double>& row, const std::vector<double>& mean,
                                    const std::vector<double>& sd) {
    std::vector<double> out(row.size());
    for (std::size_t f = 0; f < row.size(); ++f) out[f] = (row[f] - mean[f]) / sd[f];
    return out;
}

// Softmax cross-entropy loss and gradient on standardized rows.
double logreg_loss_grad(const std::vector<std::vector<double>>& xs, const std::vector<int>& y, int n_classes,
                        const std::vector<std::vector<double>>& w, double l2,
                        std::vector<std::vector<double>>* grad) {
    const std::size_t n = xs.size();
    const std::size_t d = xs.empty() ? 0 : xs[0].size();
    if (grad) grad->assign(static_cast<std::size_t>(n_classes), std::vector<double>(d + 1, 0.0));

    double loss = 0.0;
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    for (std::size_t c = 0; c < n; ++c) {
        for (int k = 0; k < n_classes; ++k) {
            double z = w[static_cast<std::size_t>(k)][d];  // bias
            for (std::size_t f = 0; f < d; ++f) z += w[static_cast<std::size_t>(k)][f] * xs[c][f];
            logits[static_cast<std::size_t>(k)] = z;
        }
        const double zmax = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (int k = 0; k < n_classes; ++k) denom += std::exp(logits[static_cast<std::size_t>(k)] - zmax);
        loss -= (logits[static_cast<std::size_t>(y[c])] - zmax - std::log(denom)) / static_cast<double>(n);
        if (grad) {
            for (int k = 0; k < n_classes; ++k) {
                const double p = std::exp(logits[static_cast<std::size_t>(k)] - zmax) / denom;
                const double delta = (p - (k == y[c] ? 1.0 : 0.0)) / static_cast<double>(n);
                auto& gk = (*grad)[static_cast<std::size_t>(k)];
                for (std::size_t f = 0; f < d; ++f) gk[f] += delta * xs[c][f];
                gk[d] += delta;
            }
        }
    }
    for (int k = 0; k < n_classes; ++k) {
        for (std::size_t f = 0; f < d; ++f) {
            const double wf = w[static_cast<std::size_t>(k)][f];
            loss += l2 * wf * wf;
            if (grad) (*grad)[static_cast<std::size_t>(k)][f] += 2.0 * l2 * wf;
        }
    }
    return loss;
}

double grad_norm(const std::vector<std::vector<double>>& grad) {
    double s = 0.0;
    for (const auto& row : grad)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

} // namespace

LogRegModel train_logreg(const Dataset& train, const LogRegHyper& hyper) {
    train.validate();
    std::set<int> present(train.labels.begin(), train.labels.end());
    if (present.size() < 2) throw ValidationError("train_logreg: need at least two classes present");

    const int n_classes = static_cast<int>(class_names().size());
    LogRegModel model;
    model.classes = class_names();
    model.feature_names = train.feature_names;
    model.hyper = hyper;
    standardization_stats(train.x, model.feat_mean, model.feat_std);

    std::vector<std::vector<double>> xs(train.n_cases());
    for (std::size_t c = 0; c < train.n_cases(); ++c)
        xs[c] = standardize_row(train.x[c], model.feat_mean, model.feat_std);

    const std::size_t d = train.n_features();
    model.weights.assign(static_cast<std::size_t>(n_classes), std::vector<double>(d + 1, 0.0));

    std::vector<std::vector<double>> grad;
    double loss = logreg_loss_grad(xs, train.labels, n_classes, model.weights, hyper.l2_weight, &grad);
    double lr = 1.0;
    for (int it = 0; it < hyper.max_iters; ++it) {
        if (grad_norm(grad) < hyper.tol) break;
        // Backtracking on the full-batch objective.
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            std::vector<std::vector<double>> cand = model.weights;
            for (int k = 0; k < n_classes; ++k)
                for (std::size_t f = 0; f <= d; ++f)
                    cand[static_cast<std::size_t>(k)][f] -= lr * grad[static_cast<std::size_t>(k)][f];
            std::vector<std::vector<double>> cand_grad;
            const double cand_loss =
                logreg_loss_grad(xs, train.labels, n_classes, cand, hyper.l2_weight, &cand_grad);
            if (cand_loss <= loss) {
                model.weights = std::move(cand);
                grad = std::move(cand_grad);
                loss = cand_loss;
                accepted = true;
                lr *= 1.25;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) break;
    }
    return model;
}

Prediction predict(const LogRegModel& model, const std::vector<double>& x) {
    if (x.size() != model.feat_mean.size())
        throw ValidationError("predict: feature dimension mismatch");
    const std::vector<double> xs = standardize_row(x, model.feat_mean, model.feat_std);
    const int n_classes = static_cast<int>(model.weights.size());
    const std::size_t d = xs.size();
    Prediction out;
    out.probabilities.resize(static_cast<std::size_t>(n_classes));
    double zmax = -1e300;
    for (int k = 0; k < n_classes; ++k) {
        double z = model.weights[static_cast<std::size_t>(k)][d];
        for (std::size_t f = 0; f < d; ++f) z += model.weights[static_cast<std::size_t>(k)][f] * xs[f];
        out.probabilities[static_cast<std::size_t>(k)] = z;
        zmax = std::max(zmax, z);
    }
    double denom = 0.0;
    for (double& p : out.probabilities) {
        p = std::exp(p - zmax);
        denom += p;
    }
    out.class_idx = 0;
    for (int k = 0; k < n_classes; ++k) {
        out.probabilities[static_cast<std::size_t>(k)] /= denom;
        if (out.probabilities[static_cast<std::size_t>(k)] >
            out.probabilities[static_cast<std::size_t>(out.class_idx)] + 0.0)
            out.class_idx = k;  // strict >, so ties stay at the smaller index
    }
    return out;
}

int knn_classify(const Dataset& train, const std::vector<double>& x, int k) {
    train.validate();
    if (train.n_cases() == 0) throw ValidationError("knn_classify: empty training set");
    if (k < 1 || k > static_cast<int>(train.n_cases()))
        throw ValidationError("knn_classify: k out of range");
    if (x.size() != train.n_features()) throw ValidationError("knn_classify: feature dimension mismatch");

    std::vector<double> mean, sd;
    standardization_stats(train.x, mean, sd);
    const std::vector<double> q = standardize_row(x, mean, sd);

    std::vector<std::pair<double, int>> dist;
    dist.reserve(train.n_cases());
    for (std::size_t c = 0; c < train.n_cases(); ++c) {
        const std::vector<double> r = standardize_row(train.x[c], mean, sd);
        double s = 0.0;
        for (std::size_t f = 0; f < q.size(); ++f) s += (q[f] - r[f]) * (q[f] - r[f]);
        dist.emplace_back(std::sqrt(s), static_cast<int>(c));
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<int> votes(class_names().size(), 0);
    for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)])];
    int best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& truth,
                                               const std::vector<int>& predicted, int n_classes) {
    if (truth.size() != predicted.size()) throw ValidationError("confusion_matrix: length mismatch");
    std::vector<std::vector<int>> m(static_cast<std::size_t>(n_classes),
                                    std::vector<int>(static_cast<std::size_t>(n_classes), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes)
            throw ValidationError("confusion_matrix: class index out of range");
        ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return m;
}

std::vector<int> fit_predict(const Dataset& train, const Dataset& test, const ClassifierSpec& spec) {
    std::vector<int> out;
    out.reserve(test.n_cases());
    if (spec.kind == ClassifierSpec::Kind::LogReg) {
        const LogRegModel model = train_logreg(train, spec.logreg);
        for (const auto& row : test.x) out.push_back(predict(model, row).class_idx);
    } else {
        for (const auto& row : test.x) out.push_back(knn_classify(train, row, spec.knn_k));
    }
    return out;
}

namespace {

// Deterministic stratified subsample of `size` cases: per-class quotas by
// largest remainder, members drawn by seeded shuffle within each class.
std::vector<int> stratified_subsample(const Dataset& data, int size, Rng& rng) {
    const int n = static_cast<int>(data.n_cases());
    const int n_classes = static_cast<int>(class_names().size());
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n; ++c) by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(c)])].push_back(c);

    std::vector<int> quota(static_cast<std::size_t>(n_classes), 0);
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int k = 0; k < n_classes; ++k) {
        const double exact = static_cast<double>(size) * static_cast<double>(by_class[static_cast<std::size_t>(k)].size()) / n;
        quota[static_cast<std::size_t>(k)] = static_cast<int>(exact);
        assigned += quota[static_cast<std::size_t>(k)];
        remainders.emplace_back(-(exact - quota[static_cast<std::size_t>(k)]), k);
    }
    std::stable_sort(remainders.begin(), remainders.end());
    for (std::size_t i = 0; assigned < size && i < remainders.size(); ++i) {
        const int k = remainders[i].second;
        if (quota[static_cast<std::size_t>(k)] < static_cast<int>(by_class[static_cast<std::size_t>(k)].size())) {
            ++quota[static_cast<std::size_t>(k)];
            ++assigned;
        }
    }
    std::vector<int> chosen;
    for (int k = 0; k < n_classes; ++k) {
        auto& members = by_class[static_cast<std::size_t>(k)];
        if (members.empty()) continue;
        if (quota[static_cast<std::size_t>(k)] == 0)
            throw ValidationError("learning_curve: size too small to keep every class represented");
        rng.shuffle(members);
        for (int i = 0; i < quota[static_cast<std::size_t>(k)]; ++i) chosen.push_back(members[static_cast<std::size_t>(i)]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

double holdout_accuracy(const Dataset& data, const std::vector<int>& train_idx, const ClassifierSpec& spec) {
    std::vector<char> in_train(data.n_cases(), 0);
    for (int c : train_idx) in_train[static_cast<std::size_t>(c)] = 1;
    std::vector<int> test_idx;
    for (std::size_t c = 0; c < data.n_cases(); ++c)
        if (!in_train[c]) test_idx.push_back(static_cast<int>(c));
    const Dataset train = data.subset_cases(train_idx);
    const Dataset test = data.subset_cases(test_idx);
    const std::vector<int> pred = fit_predict(train, test, spec);
    int correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == test.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

} // namespace

// Defined in selection.cpp; reused for the degenerate full-size point.
double cross_validated_accuracy(const Dataset& dataset, const ClassifierSpec& spec, int folds,
                                std::uint64_t seed);

std::vector<CurvePoint> learning_curve(const Dataset& dataset, const std::vector<int>& sizes, int repeats,
                                       const ClassifierSpec& spec, std::uint64_t seed) {
    dataset.validate();
    if (repeats < 1) throw ValidationError("learning_curve: repeats must be >= 1");
    const int n = static_cast<int>(dataset.n_cases());
    std::vector<CurvePoint> out;
    for (int size : sizes) {
        if (size < 1 || size > n) throw ValidationError("learning_curve: size out of range");
        CurvePoint pt;
        pt.size = size;
        if (size == n) {
            // Single possible subset and an empty holdout: report 5-fold CV.
            pt.mean_acc = cross_validated_accuracy(dataset, spec, 5, seed);
            pt.std_acc = 0.0;
        } else {
            Rng rng(seed ^ (0xa0761d6478bd642full * static_cast<std::uint64_t>(size + 1)));
            std::vector<double> accs;
            accs.reserve(static_cast<std::size_t>(repeats));
            for (int r = 0; r < repeats; ++r) {
                const std::vector<int> train_idx = stratified_subsample(dataset, size, rng);
                accs.push_back(holdout_accuracy(dataset, train_idx, spec));
            }
            double mean = 0.0;
            for (double a : accs) mean += a;
            mean /= static_cast<double>(accs.size());
            double var = 0.0;
            for (double a : accs) var += (a - mean) * (a - mean);
            pt.mean_acc = mean;
            pt.std_acc = std::sqrt(var / static_cast<double>(accs.size()));
        }
        out.push_back(pt);
    }
    return out;
}

} // namespace cardiomech
