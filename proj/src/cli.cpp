#include "cardiomech/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cardiomech/biomech.hpp"
#include "cardiomech/errors.hpp"
#include "cardiomech/features.hpp"
#include "cardiomech/phantom.hpp"
#include "cardiomech/pipeline.hpp"
#include "cardiomech/pipeline_config.hpp"
#include "cardiomech/propagation.hpp"
#include "cardiomech/registration.hpp"
#include "cardiomech/threading.hpp"
#include "cardiomech/volume_io.hpp"

namespace cardiomech {

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileAccess, "cannot open: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::FileAccess, "cannot open for writing: " + path.string());
    out << text;
}

std::string format_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON (defaults when omitted)");
        cmd->add_option("--seed", seed, "seed override")->each([this](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "worker thread count (0 = hardware)");
    }

    PipelineConfig load() const {
        PipelineConfig cfg = load_pipeline_config(config_path);
        if (seed_set) {
            cfg.seed = seed;
            cfg.registration.seed = seed;
        }
        if (threads > 0) set_threads(threads);
        return cfg;
    }
};

std::vector<int> labels_in(const LabelMap3& map) {
    std::vector<char> seen(256, 0);
    for (std::uint8_t v : map.data) seen[v] = 1;
    std::vector<int> out;
    for (int l = 1; l < 256; ++l)
        if (seen[static_cast<std::size_t>(l)]) out.push_back(l);
    return out;
}

Dataset apply_selection(const Dataset& data, const std::string& selection_path) {
    if (selection_path.empty()) return data;
    const SelectionResult sel = selection_result_from_json(read_text(selection_path));
    std::vector<int> idx;
    for (const std::string& name : sel.selected) {
        const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
        if (it == data.feature_names.end())
            throw ValidationError("selected feature '" + name + "' missing from the table");
        idx.push_back(static_cast<int>(it - data.feature_names.begin()));
    }
    return data.subset_features(idx);
}

int run(int argc, const char* const* argv) {
    CLI::App app{"deformable cardiac registration, strain analysis and disease classification"};
    app.require_subcommand(1);

    // phantom
    auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic cohort");
    std::string ph_out;
    int ph_n = 2, ph_dim = 64, ph_frames = 10;
    double ph_spacing = 1.0;
    double ph_noise = -1.0;
    CommonOpts ph_common;
    cmd_phantom->add_option("--out", ph_out, "output cohort directory")->required();
    cmd_phantom->add_option("--n-per-class", ph_n, "cases per class");
    cmd_phantom->add_option("--dim", ph_dim, "cubic grid size (voxels)");
    cmd_phantom->add_option("--spacing", ph_spacing, "voxel spacing (mm)");
    cmd_phantom->add_option("--frames", ph_frames, "frames per cine sequence");
    cmd_phantom->add_option("--noise-sigma", ph_noise, "frame noise sigma (intensity units)");
    ph_common.attach(cmd_phantom);

    // register
    auto* cmd_register = app.add_subcommand("register", "register a moving volume onto a fixed one");
    std::string rg_fixed, rg_moving, rg_out_field, rg_out_json;
    CommonOpts rg_common;
    cmd_register->add_option("--fixed", rg_fixed)->required();
    cmd_register->add_option("--moving", rg_moving)->required();
    cmd_register->add_option("--out-field", rg_out_field, "output displacement field")->required();
    cmd_register->add_option("--out-json", rg_out_json, "diagnostics JSON");
    rg_common.attach(cmd_register);

    // warp
    auto* cmd_warp = app.add_subcommand("warp", "warp an image or label map by a field");
    std::string wp_input, wp_field, wp_out;
    cmd_warp->add_option("--input", wp_input)->required();
    cmd_warp->add_option("--field", wp_field)->required();
    cmd_warp->add_option("--out", wp_out)->required();

    // dice
    auto* cmd_dice = app.add_subcommand("dice", "per-label Dice between two label maps");
    std::string dc_a, dc_b, dc_out;
    cmd_dice->add_option("--a", dc_a)->required();
    cmd_dice->add_option("--b", dc_b)->required();
    cmd_dice->add_option("--out", dc_out, "write the table as CSV");

    // segment
    auto* cmd_segment = app.add_subcommand("segment", "multi-frame propagation onto a phase");
    std::string sg_case, sg_target = "es", sg_out;
    CommonOpts sg_common;
    cmd_segment->add_option("--case", sg_case, "case directory")->required();
    cmd_segment->add_option("--target", sg_target, "ed or es");
    cmd_segment->add_option("--out", sg_out, "fused label map")->required();
    sg_common.attach(cmd_segment);

    // strain
    auto* cmd_strain = app.add_subcommand("strain", "energy and moduli maps of a field");
    std::string st_field, st_prefix;
    CommonOpts st_common;
    cmd_strain->add_option("--field", st_field)->required();
    cmd_strain->add_option("--out-prefix", st_prefix)->required();
    st_common.attach(cmd_strain);

    // features
    auto* cmd_features = app.add_subcommand("features", "feature table from case directories");
    std::string ft_case, ft_cohort, ft_out;
    CommonOpts ft_common;
    cmd_features->add_option("--case", ft_case, "single case directory");
    cmd_features->add_option("--cohort", ft_cohort, "cohort directory of cases");
    cmd_features->add_option("--out", ft_out, "output CSV")->required();
    ft_common.attach(cmd_features);

    // select
    auto* cmd_select = app.add_subcommand("select", "greedy wrapper feature selection");
    std::string sl_features, sl_out;
    CommonOpts sl_common;
    cmd_select->add_option("--features", sl_features, "feature CSV")->required();
    cmd_select->add_option("--out", sl_out, "selection JSON")->required();
    sl_common.attach(cmd_select);

    // train
    auto* cmd_train = app.add_subcommand("train", "train the logistic-regression classifier");
    std::string tr_features, tr_out, tr_selection;
    CommonOpts tr_common;
    cmd_train->add_option("--features", tr_features)->required();
    cmd_train->add_option("--out", tr_out, "model JSON")->required();
    cmd_train->add_option("--selection", tr_selection, "restrict to a selection JSON");
    tr_common.attach(cmd_train);

    // predict
    auto* cmd_predict = app.add_subcommand("predict", "predict classes for a feature table");
    std::string pr_model, pr_features, pr_out;
    cmd_predict->add_option("--model", pr_model)->required();
    cmd_predict->add_option("--features", pr_features)->required();
    cmd_predict->add_option("--out", pr_out, "predictions CSV")->required();

    // evaluate
    auto* cmd_evaluate = app.add_subcommand("evaluate", "confusion matrix of a model on a table");
    std::string ev_model, ev_features, ev_out;
    cmd_evaluate->add_option("--model", ev_model)->required();
    cmd_evaluate->add_option("--features", ev_features)->required();
    cmd_evaluate->add_option("--out-confusion", ev_out, "confusion CSV");

    // curve
    auto* cmd_curve = app.add_subcommand("curve", "learning curve over training-set sizes");
    std::string cv_features, cv_out, cv_sizes, cv_selection;
    int cv_repeats = 50;
    CommonOpts cv_common;
    cmd_curve->add_option("--features", cv_features)->required();
    cmd_curve->add_option("--sizes", cv_sizes, "comma-separated training sizes")->required();
    cmd_curve->add_option("--repeats", cv_repeats, "random subsets per size");
    cmd_curve->add_option("--selection", cv_selection, "restrict to a selection JSON");
    cmd_curve->add_option("--out", cv_out, "curve CSV")->required();
    cv_common.attach(cmd_curve);

    // gradcheck
    auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::string gc_term = "total";
    int gc_grid = 12, gc_probes = 50;
    double gc_eps = 1e-3;
    CommonOpts gc_common;
    cmd_gradcheck->add_option("--term", gc_term, "sim, nhe or total");
    cmd_gradcheck->add_option("--grid", gc_grid, "test grid size");
    cmd_gradcheck->add_option("--probes", gc_probes, "probed components");
    cmd_gradcheck->add_option("--eps", gc_eps, "finite-difference step (mm)");
    gc_common.attach(cmd_gradcheck);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (cmd_phantom->parsed()) {
        const PipelineConfig cfg = ph_common.load();
        PhantomParams base = default_phantom_params({ph_dim, ph_dim, ph_dim},
                                                    {ph_spacing, ph_spacing, ph_spacing}, ph_frames);
        if (ph_noise >= 0.0) base.noise_sigma = ph_noise;
        const std::vector<PhantomCase> cohort = generate_cohort(ph_n, base, cfg.seed);
        for (const PhantomCase& c : cohort) {
            write_case_dir(std::filesystem::path(ph_out) / c.case_id, c);
            std::cout << c.case_id << "\n";
        }
        return 0;
    }

    if (cmd_register->parsed()) {
        const PipelineConfig cfg = rg_common.load();
        const Volume3 fixed = read_image(rg_fixed);
        const Volume3 moving = read_image(rg_moving);
        const RegResult result = register_pair(fixed, moving, cfg.registration);
        write_volume(rg_out_field, result.field);
        if (!rg_out_json.empty()) write_text(rg_out_json, reg_result_to_json(result));
        std::cout << "fold_fraction " << format_num(result.fold_fraction) << "\n";
        if (!result.per_stage_losses.empty()) {
            const StageLoss& last = result.per_stage_losses.back();
            std::cout << "final_loss " << format_num(last.l) << " (l_sim " << format_num(last.l_sim)
                      << ", l_nhe " << format_num(last.l_nhe) << ")\n";
        }
        return 0;
    }

    if (cmd_warp->parsed()) {
        const DisplacementField3 field = read_field(wp_field);
        const AnyVolume input = read_volume(wp_input);
        if (const Volume3* vol = std::get_if<Volume3>(&input)) {
            write_volume(wp_out, warp_volume(*vol, field));
        } else if (const LabelMap3* labels = std::get_if<LabelMap3>(&input)) {
            write_volume(wp_out, warp_labels(*labels, field));
        } else {
            throw ValidationError("warp: input must be an Image or LabelMap");
        }
        return 0;
    }

    if (cmd_dice->parsed()) {
        const LabelMap3 a = read_labels(dc_a);
        const LabelMap3 b = read_labels(dc_b);
        std::vector<int> labels = labels_in(a);
        for (int l : labels_in(b))
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
        std::sort(labels.begin(), labels.end());
        std::ostringstream table;
        table << "label,dice\n";
        for (int l : labels) table << l << "," << format_num(dice(a, b, l)) << "\n";
        std::cout << table.str();
        if (!dc_out.empty()) write_text(dc_out, table.str());
        return 0;
    }

    if (cmd_segment->parsed()) {
        const PipelineConfig cfg = sg_common.load();
        if (sg_target != "ed" && sg_target != "es") throw ValidationError("segment: target must be ed or es");
        const LoadedCase c = read_case_dir(sg_case);
        const CardiacPhase target = sg_target == "es" ? CardiacPhase::ES : CardiacPhase::ED;
        const LabelMap3 fused =
            multi_frame_segment(c.seq, target, cfg.n_adjacent, cfg.registration, cfg.lwv_window);
        write_volume(sg_out, fused);
        return 0;
    }

    if (cmd_strain->parsed()) {
        const PipelineConfig cfg = st_common.load();
        const DisplacementField3 field = read_field(st_field);
        const TensorField3 f = deformation_gradient(field);
        const EnergyMaps energy = nhe_density(f, cfg.registration.material);
        const ModuliMaps moduli = moduli_from_energy(energy.phi_dis, energy.phi_vol,
                                                     cfg.registration.material, cfg.moduli_window,
                                                     cfg.energy_floor);
        const std::string prefix = st_prefix;
        write_volume(prefix + "_phi.vol", energy.phi);
        write_volume(prefix + "_phi_dis.vol", energy.phi_dis);
        write_volume(prefix + "_phi_vol.vol", energy.phi_vol);
        write_volume(prefix + "_mu.vol", moduli.mu_map);
        write_volume(prefix + "_kappa.vol", moduli.kappa_map);
        write_volume(prefix + "_validity.vol", moduli.validity_mask);
        std::cout << "nhe_total " << format_num(nhe_total(field, cfg.registration.material)) << "\n";
        std::cout << "folded_voxels " << energy.fold_count << "\n";
        return 0;
    }

    if (cmd_features->parsed()) {
        const PipelineConfig cfg = ft_common.load();
        if (ft_case.empty() == ft_cohort.empty())
            throw ValidationError("features: give exactly one of --case or --cohort");
        std::vector<FeatureVector> rows;
        std::vector<std::filesystem::path> dirs;
        if (!ft_case.empty()) dirs.push_back(ft_case);
        else dirs = list_case_dirs(ft_cohort);
        for (const auto& dir : dirs) {
            const LoadedCase c = read_case_dir(dir);
            rows.push_back(compute_case_features(c.case_id, c.class_label, c.seq, cfg));
            for (const std::string& w : rows.back().warnings) std::cerr << c.case_id << ": " << w << "\n";
            std::cout << c.case_id << "\n";
        }
        write_feature_csv(ft_out, rows);
        return 0;
    }

    if (cmd_select->parsed()) {
        const PipelineConfig cfg = sl_common.load();
        const Dataset data = read_feature_csv(sl_features);
        const SelectionResult result = select_features(data, cfg.selection.to_classifier_spec(cfg.seed),
                                                       cfg.selection.to_cv_spec(), cfg.seed);
        write_text(sl_out, selection_result_to_json(result));
        std::cout << "acc_max " << format_num(result.acc_max) << " selected " << result.selected.size()
                  << " of " << data.n_features() << "\n";
        return 0;
    }

    if (cmd_train->parsed()) {
        const PipelineConfig cfg = tr_common.load();
        Dataset data = apply_selection(read_feature_csv(tr_features), tr_selection);
        ClassifierSpec spec = cfg.selection.to_classifier_spec(cfg.seed);
        if (spec.kind != ClassifierSpec::Kind::LogReg)
            throw ValidationError("train: only the logreg classifier serializes to a model file");
        const LogRegModel model = train_logreg(data, spec.logreg);
        write_text(tr_out, logreg_model_to_json(model));
        return 0;
    }

    if (cmd_predict->parsed()) {
        const LogRegModel model = logreg_model_from_json(read_text(pr_model));
        Dataset data = read_feature_csv(pr_features);
        std::vector<int> idx;
        for (const std::string& name : model.feature_names) {
            const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
            if (it == data.feature_names.end())
                throw ValidationError("model feature '" + name + "' missing from the table");
            idx.push_back(static_cast<int>(it - data.feature_names.begin()));
        }
        data = data.subset_features(idx);
        std::ostringstream out;
        out << "case_id,predicted";
        for (const std::string& c : model.classes) out << ",p_" << c;
        out << "\n";
        for (std::size_t i = 0; i < data.n_cases(); ++i) {
            const Prediction p = predict(model, data.x[i]);
            out << data.case_ids[i] << "," << model.classes[static_cast<std::size_t>(p.class_idx)];
            for (double prob : p.probabilities) out << "," << format_num(prob);
            out << "\n";
        }
        write_text(pr_out, out.str());
        return 0;
    }

    if (cmd_evaluate->parsed()) {
        const LogRegModel model = logreg_model_from_json(read_text(ev_model));
        Dataset data = read_feature_csv(ev_features);
        std::vector<int> idx;
        for (const std::string& name : model.feature_names) {
            const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
            if (it == data.feature_names.end())
                throw ValidationError("model feature '" + name + "' missing from the table");
            idx.push_back(static_cast<int>(it - data.feature_names.begin()));
        }
        data = data.subset_features(idx);
        std::vector<int> pred;
        for (const auto& row : data.x) pred.push_back(predict(model, row).class_idx);
        const auto confusion =
            confusion_matrix(data.labels, pred, static_cast<int>(class_names().size()));
        int correct = 0;
        for (std::size_t k = 0; k < confusion.size(); ++k) correct += confusion[k][k];
        std::ostringstream out;
        out << "truth\\predicted";
        for (const std::string& c : class_names()) out << "," << c;
        out << "\n";
        for (std::size_t r = 0; r < confusion.size(); ++r) {
            out << class_names()[r];
            for (int v : confusion[r]) out << "," << v;
            out << "\n";
        }
        if (!ev_out.empty()) write_text(ev_out, out.str());
        std::cout << out.str();
        std::cout << "accuracy " << format_num(static_cast<double>(correct) / static_cast<double>(data.n_cases()))
                  << "\n";
        return 0;
    }

    if (cmd_curve->parsed()) {
        const PipelineConfig cfg = cv_common.load();
        const Dataset data = apply_selection(read_feature_csv(cv_features), cv_selection);
        std::vector<int> sizes;
        std::stringstream ss(cv_sizes);
        std::string tok;
        while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
        const auto points =
            learning_curve(data, sizes, cv_repeats, cfg.selection.to_classifier_spec(cfg.seed), cfg.seed);
        std::ostringstream out;
        out << "size,mean_acc,std_acc\n";
        for (const CurvePoint& p : points)
            out << p.size << "," << format_num(p.mean_acc) << "," << format_num(p.std_acc) << "\n";
        write_text(cv_out, out.str());
        std::cout << out.str();
        return 0;
    }

    if (cmd_gradcheck->parsed()) {
        const PipelineConfig cfg = gc_common.load();
        LossTerm term;
        if (gc_term == "sim") term = LossTerm::Similarity;
        else if (gc_term == "nhe") term = LossTerm::Energy;
        else if (gc_term == "total") term = LossTerm::Total;
        else throw ValidationError("gradcheck: term must be sim, nhe or total");
        const double err = gradient_check(cfg.registration, gc_grid, gc_probes, gc_eps, term);
        std::cout << "max_relative_error " << format_num(err) << "\n";
        return 0;
    }

    return 1;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace cardiomech
