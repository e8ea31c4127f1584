#include "cardiomech/pipeline_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cardiomech/errors.hpp"

namespace cardiomech {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key()))
            throw ValidationError(where + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

json reg_config_to_json_obj(const RegConfig& cfg) {
    json stages = json::array();
    for (const RegStage& s : cfg.stages) {
        stages.push_back({{"scale_factor", s.scale_factor},
                          {"iterations", s.iterations},
                          {"step_size", s.step_size}});
    }
    return json{{"stages", stages},
                {"lambda", cfg.lambda},
                {"material", {{"mu", cfg.material.mu}, {"kappa", cfg.material.kappa}}},
                {"sim", {{"windows", cfg.sim.windows}, {"variance_eps", cfg.sim.variance_eps}}},
                {"field_smoothing_sigma_mm", cfg.field_smoothing_sigma_mm},
                {"seed", cfg.seed},
                {"convergence_tol", cfg.convergence_tol}};
}

RegConfig reg_config_from_json_obj(const json& obj) {
    require_keys(obj, {"stages", "lambda", "material", "sim", "field_smoothing_sigma_mm", "seed",
                       "convergence_tol"},
                 "registration");
    RegConfig cfg;
    if (obj.contains("stages")) {
        cfg.stages.clear();
        for (const json& s : obj.at("stages")) {
            require_keys(s, {"scale_factor", "iterations", "step_size"}, "registration.stages");
            RegStage stage;
            read_if(s, "scale_factor", stage.scale_factor);
            read_if(s, "iterations", stage.iterations);
            read_if(s, "step_size", stage.step_size);
            cfg.stages.push_back(stage);
        }
    }
    read_if(obj, "lambda", cfg.lambda);
    if (obj.contains("material")) {
        require_keys(obj.at("material"), {"mu", "kappa"}, "registration.material");
        read_if(obj.at("material"), "mu", cfg.material.mu);
        read_if(obj.at("material"), "kappa", cfg.material.kappa);
    }
    if (obj.contains("sim")) {
        require_keys(obj.at("sim"), {"windows", "variance_eps"}, "registration.sim");
        read_if(obj.at("sim"), "windows", cfg.sim.windows);
        read_if(obj.at("sim"), "variance_eps", cfg.sim.variance_eps);
    }
    read_if(obj, "field_smoothing_sigma_mm", cfg.field_smoothing_sigma_mm);
    read_if(obj, "seed", cfg.seed);
    read_if(obj, "convergence_tol", cfg.convergence_tol);
    cfg.validate();
    return cfg;
}

} // namespace

ClassifierSpec SelectionSpec::to_classifier_spec(std::uint64_t seed) const {
    validate();
    ClassifierSpec spec;
    if (classifier == "logreg") {
        spec.kind = ClassifierSpec::Kind::LogReg;
    } else {
        spec.kind = ClassifierSpec::Kind::Knn;
    }
    spec.logreg.l2_weight = l2_weight;
    spec.logreg.max_iters = max_iters;
    spec.logreg.tol = tol;
    spec.logreg.seed = seed;
    spec.knn_k = knn_k;
    return spec;
}

CvSpec SelectionSpec::to_cv_spec() const { return CvSpec{cv_folds}; }

void SelectionSpec::validate() const {
    if (classifier != "logreg" && classifier != "knn")
        throw ValidationError("selection.classifier must be 'logreg' or 'knn'");
    if (cv_folds < 2) throw ValidationError("selection.cv_folds must be >= 2");
    if (l2_weight < 0.0) throw ValidationError("selection.l2_weight must be >= 0");
    if (max_iters < 0) throw ValidationError("selection.max_iters must be >= 0");
    if (knn_k < 1) throw ValidationError("selection.knn_k must be >= 1");
}

void PipelineConfig::validate() const {
    registration.validate();
    selection.validate();
    if (moduli_window < 3 || moduli_window % 2 == 0)
        throw ValidationError("moduli_window must be odd and >= 3");
    if (lwv_window < 3 || lwv_window % 2 == 0) throw ValidationError("lwv_window must be odd and >= 3");
    if (n_adjacent < 1) throw ValidationError("n_adjacent must be >= 1");
    if (!(energy_floor > 0.0)) throw ValidationError("energy_floor must be > 0");
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    json obj{{"registration", reg_config_to_json_obj(cfg.registration)},
             {"moduli_window", cfg.moduli_window},
             {"energy_floor", cfg.energy_floor},
             {"lwv_window", cfg.lwv_window},
             {"n_adjacent", cfg.n_adjacent},
             {"selection",
              {{"cv_folds", cfg.selection.cv_folds},
               {"classifier", cfg.selection.classifier},
               {"l2_weight", cfg.selection.l2_weight},
               {"max_iters", cfg.selection.max_iters},
               {"tol", cfg.selection.tol},
               {"knn_k", cfg.selection.knn_k}}},
             {"seed", cfg.seed}};
    return obj.dump(2) + "\n";
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(obj, {"registration", "moduli_window", "energy_floor", "lwv_window", "n_adjacent",
                       "selection", "seed"},
                 "config");
    PipelineConfig cfg;
    if (obj.contains("registration")) cfg.registration = reg_config_from_json_obj(obj.at("registration"));
    read_if(obj, "moduli_window", cfg.moduli_window);
    read_if(obj, "energy_floor", cfg.energy_floor);
    read_if(obj, "lwv_window", cfg.lwv_window);
    read_if(obj, "n_adjacent", cfg.n_adjacent);
    if (obj.contains("selection")) {
        const json& sel = obj.at("selection");
        require_keys(sel, {"cv_folds", "classifier", "l2_weight", "max_iters", "tol", "knn_k"},
                     "selection");
        read_if(sel, "cv_folds", cfg.selection.cv_folds);
        read_if(sel, "classifier", cfg.selection.classifier);
        read_if(sel, "l2_weight", cfg.selection.l2_weight);
        read_if(sel, "max_iters", cfg.selection.max_iters);
        read_if(sel, "tol", cfg.selection.tol);
        read_if(sel, "knn_k", cfg.selection.knn_k);
    }
    read_if(obj, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    if (path.empty()) return default_pipeline_config();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileAccess, "cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return pipeline_config_from_json(buf.str());
}

std::string reg_result_to_json(const RegResult& result) {
    json stages = json::array();
    for (const StageLoss& s : result.per_stage_losses)
        stages.push_back({{"l_sim", s.l_sim}, {"l_nhe", s.l_nhe}, {"l", s.l}});
    json obj{{"per_stage_losses", stages},
             {"fold_fraction", result.fold_fraction},
             {"iterations_used", result.iterations_used}};
    return obj.dump(2) + "\n";
}

std::string selection_result_to_json(const SelectionResult& result) {
    json trace = json::array();
    for (const SelectionTraceEntry& t : result.trace) {
        trace.push_back(
            {{"step", t.step}, {"feature", t.feature}, {"action", t.action}, {"accuracy", t.accuracy}});
    }
    json obj{{"selected", result.selected},
             {"discarded", result.discarded},
             {"acc_max", result.acc_max},
             {"trace", trace}};
    return obj.dump(2) + "\n";
}

SelectionResult selection_result_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("selection JSON invalid: ") + e.what());
    }
    require_keys(obj, {"selected", "discarded", "acc_max", "trace"}, "selection result");
    SelectionResult res;
    res.selected = obj.at("selected").get<std::vector<std::string>>();
    res.discarded = obj.at("discarded").get<std::vector<std::string>>();
    res.acc_max = obj.at("acc_max").get<double>();
    if (obj.contains("trace")) {
        for (const json& t : obj.at("trace")) {
            res.trace.push_back({t.at("step").get<int>(), t.at("feature").get<std::string>(),
                                 t.at("action").get<std::string>(), t.at("accuracy").get<double>()});
        }
    }
    return res;
}

std::string logreg_model_to_json(const LogRegModel& model) {
    json obj{{"classes", model.classes},
             {"feature_names", model.feature_names},
             {"weights", model.weights},
             {"standardization", {{"mean", model.feat_mean}, {"std", model.feat_std}}},
             {"hyper",
              {{"l2_weight", model.hyper.l2_weight},
               {"max_iters", model.hyper.max_iters},
               {"tol", model.hyper.tol},
               {"seed", model.hyper.seed}}}};
    return obj.dump(2) + "\n";
}

LogRegModel logreg_model_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model JSON invalid: ") + e.what());
    }
    require_keys(obj, {"classes", "feature_names", "weights", "standardization", "hyper"}, "model");
    LogRegModel model;
    model.classes = obj.at("classes").get<std::vector<std::string>>();
    model.feature_names = obj.at("feature_names").get<std::vector<std::string>>();
    model.weights = obj.at("weights").get<std::vector<std::vector<double>>>();
    const json& st = obj.at("standardization");
    require_keys(st, {"mean", "std"}, "model.standardization");
    model.feat_mean = st.at("mean").get<std::vector<double>>();
    model.feat_std = st.at("std").get<std::vector<double>>();
    const json& hy = obj.at("hyper");
    require_keys(hy, {"l2_weight", "max_iters", "tol", "seed"}, "model.hyper");
    model.hyper.l2_weight = hy.at("l2_weight").get<double>();
    model.hyper.max_iters = hy.at("max_iters").get<int>();
    model.hyper.tol = hy.at("tol").get<double>();
    model.hyper.seed = hy.at("seed").get<std::uint64_t>();

    if (model.weights.size() != model.classes.size())
        throw ValidationError("model: weights rows must match classes");
    for (const auto& row : model.weights) {
        if (row.size() != model.feature_names.size() + 1)
            throw ValidationError("model: weight row length must be features + 1");
    }
    if (model.feat_mean.size() != model.feature_names.size() ||
        model.feat_std.size() != model.feature_names.size())
        throw ValidationError("model: standardization length must match features");
    return model;
}

} // namespace cardiomech
