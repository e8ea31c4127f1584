#include "cardiomech/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cardiomech/biomech.hpp"
#include "cardiomech/errors.hpp"
#include "cardiomech/volume_io.hpp"

namespace cardiomech {

using nlohmann::json;

namespace {

std::string frame_filename(int t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d.vol", t);
    return buf;
}

json params_to_json(const PhantomParams& p) {
    return json{{"dims", p.dims},
                {"spacing", p.spacing},
                {"frames", p.frames},
                {"lv_center_mm", p.lv_center_mm},
                {"lv_inner_radius_mm", p.lv_inner_radius_mm},
                {"lv_outer_radius_mm", p.lv_outer_radius_mm},
                {"rv_center_offset_mm", p.rv_center_offset_mm},
                {"rv_radius_mm", p.rv_radius_mm},
                {"z_half_height_mm", p.z_half_height_mm},
                {"contraction_amplitude", p.contraction_amplitude},
                {"twist_amplitude_rad", p.twist_amplitude_rad},
                {"rv_contraction_scale", p.rv_contraction_scale},
                {"defect_amplitude", p.defect_amplitude},
                {"wall_thickness_scale", p.wall_thickness_scale},
                {"noise_sigma", p.noise_sigma},
                {"texture_seed", p.texture_seed},
                {"class_preset", preset_name(p.preset)}};
}

} // namespace

void write_case_dir(const std::filesystem::path& dir, const PhantomCase& c) {
    std::filesystem::create_directories(dir);
    json frames = json::array();
    for (std::size_t t = 0; t < c.seq.frames.size(); ++t) {
        const std::string name = frame_filename(static_cast<int>(t));
        write_volume(dir / name, c.seq.frames[t]);
        frames.push_back(name);
    }
    write_volume(dir / "labels_ed.vol", c.seq.labels_ed);
    write_volume(dir / "labels_es.vol", c.seq.labels_es);

    json manifest{{"case_id", c.case_id},
                  {"class", c.class_label},
                  {"frames", frames},
                  {"ed_index", c.seq.ed_index},
                  {"es_index", c.seq.es_index},
                  {"labels_ed", "labels_ed.vol"},
                  {"labels_es", "labels_es.vol"},
                  {"params", params_to_json(c.params)}};
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::FileAccess, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << "\n";
}

LoadedCase read_case_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileAccess, "no manifest.json in " + dir.string());
    json manifest;
    try {
        std::ostringstream buf;
        buf << in.rdbuf();
        manifest = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ValidationError("manifest.json invalid in " + dir.string() + ": " + e.what());
    }

    LoadedCase c;
    c.case_id = manifest.at("case_id").get<std::string>();
    c.class_label = manifest.at("class").get<std::string>();
    for (const json& f : manifest.at("frames"))
        c.seq.frames.push_back(read_image(dir / f.get<std::string>()));
    c.seq.ed_index = manifest.at("ed_index").get<int>();
    c.seq.es_index = manifest.at("es_index").get<int>();
    c.seq.labels_ed = read_labels(dir / manifest.at("labels_ed").get<std::string>());
    c.seq.labels_es = read_labels(dir / manifest.at("labels_es").get<std::string>());
    c.seq.validate();
    return c;
}

std::vector<std::filesystem::path> list_case_dirs(const std::filesystem::path& cohort_dir) {
    std::vector<std::filesystem::path> dirs;
    if (!std::filesystem::is_directory(cohort_dir))
        throw ValidationError("not a directory: " + cohort_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(cohort_dir)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json"))
            dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

PhaseMaps compute_phase_maps(const CineSequence& seq, CardiacPhase phase, const PipelineConfig& cfg) {
    const DisplacementField3 motion = phase_field(seq, phase, cfg.registration);
    const ModuliMaps moduli =
        local_moduli(motion, cfg.registration.material, cfg.moduli_window, cfg.energy_floor);
    PhaseMaps maps;
    maps.mu_map = moduli.mu_map;
    maps.kappa_map = moduli.kappa_map;
    maps.phimag = field_magnitude(motion);
    maps.labels = phase == CardiacPhase::ED ? seq.labels_ed : seq.labels_es;
    return maps;
}

FeatureVector compute_case_features(const std::string& case_id, const std::string& class_label,
                                    const CineSequence& seq, const PipelineConfig& cfg) {
    const PhaseMaps ed = compute_phase_maps(seq, CardiacPhase::ED, cfg);
    const PhaseMaps es = compute_phase_maps(seq, CardiacPhase::ES, cfg);
    return extract_features(case_id, class_label, ed, es);
}

} // namespace cardiomech
