#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cardiomech/biomech.hpp"
#include "cardiomech/errors.hpp"
#include "cardiomech/features.hpp"
#include "cardiomech/kinematics.hpp"
#include "cardiomech/phantom.hpp"
#include "cardiomech/pipeline.hpp"
#include "cardiomech/pipeline_config.hpp"
#include "cardiomech/propagation.hpp"
#include "cardiomech/registration.hpp"
#include "cardiomech/similarity.hpp"
#include "cardiomech/volume.hpp"
#include "cardiomech/volume_io.hpp"

namespace py = pybind11;
using namespace cardiomech;

namespace {

// Arrays cross the boundary as (nz, ny, nx[, channels]) C-contiguous copies,
// which matches the x-fastest memory layout exactly.

GridSpec grid_from(const std::array<int, 3>& dims_xyz, const std::array<double, 3>& spacing,
                   const std::array<double, 3>& origin) {
    GridSpec g{dims_xyz, spacing, origin};
    g.validate("grid");
    return g;
}

Volume3 volume_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
                          std::array<double, 3> spacing, std::array<double, 3> origin) {
    if (arr.ndim() != 3) throw ValidationError("volume array must be 3-d (nz, ny, nx)");
    Volume3 vol(grid_from({static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(1)),
                           static_cast<int>(arr.shape(0))},
                          spacing, origin));
    std::memcpy(vol.data.data(), arr.data(), sizeof(double) * vol.data.size());
    return vol;
}

py::array_t<double> volume_to_array(const Volume3& vol) {
    const auto& d = vol.grid.dims;
    py::array_t<double> arr({d[2], d[1], d[0]});
    std::memcpy(arr.mutable_data(), vol.data.data(), sizeof(double) * vol.data.size());
    return arr;
}

DisplacementField3 field_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
                                    std::array<double, 3> spacing, std::array<double, 3> origin) {
    if (arr.ndim() != 4 || arr.shape(3) != 3)
        throw ValidationError("field array must be 4-d (nz, ny, nx, 3)");
    DisplacementField3 f(grid_from({static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(1)),
                                    static_cast<int>(arr.shape(0))},
                                   spacing, origin));
    std::memcpy(f.data.data(), arr.data(), sizeof(double) * f.data.size());
    return f;
}

py::array_t<double> field_to_array(const DisplacementField3& f) {
    const auto& d = f.grid.dims;
    py::array_t<double> arr({d[2], d[1], d[0], 3});
    std::memcpy(arr.mutable_data(), f.data.data(), sizeof(double) * f.data.size());
    return arr;
}

LabelMap3 labels_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
                            std::array<double, 3> spacing, std::array<double, 3> origin) {
    if (arr.ndim() != 3) throw ValidationError("label array must be 3-d (nz, ny, nx)");
    LabelMap3 l(grid_from({static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(1)),
                           static_cast<int>(arr.shape(0))},
                          spacing, origin));
    std::memcpy(l.data.data(), arr.data(), l.data.size());
    return l;
}

py::array_t<std::uint8_t> labels_to_array(const LabelMap3& l) {
    const auto& d = l.grid.dims;
    py::array_t<std::uint8_t> arr({d[2], d[1], d[0]});
    std::memcpy(arr.mutable_data(), l.data.data(), l.data.size());
    return arr;
}

py::array_t<double> tensor_to_array(const TensorField3& t) {
    const auto& d = t.grid.dims;
    py::array_t<double> arr({d[2], d[1], d[0], 3, 3});
    std::memcpy(arr.mutable_data(), t.data.data(), sizeof(double) * t.data.size());
    return arr;
}

RegConfig reg_config_of(const std::string& config_json) {
    if (config_json.empty()) return RegConfig{};
    return pipeline_config_from_json(config_json).registration;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "deformable cardiac registration, strain and classification core";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<GridSpec>(m, "GridSpec")
        .def_readonly("dims", &GridSpec::dims)
        .def_readonly("spacing", &GridSpec::spacing)
        .def_readonly("origin", &GridSpec::origin);

    py::class_<Volume3>(m, "Volume3")
        .def(py::init(&volume_from_array), py::arg("data"),
             py::arg("spacing") = std::array<double, 3>{1, 1, 1},
             py::arg("origin") = std::array<double, 3>{0, 0, 0})
        .def_property_readonly("grid", [](const Volume3& v) { return v.grid; })
        .def("to_numpy", &volume_to_array);

    py::class_<DisplacementField3>(m, "DisplacementField3")
        .def(py::init(&field_from_array), py::arg("data"),
             py::arg("spacing") = std::array<double, 3>{1, 1, 1},
             py::arg("origin") = std::array<double, 3>{0, 0, 0})
        .def_property_readonly("grid", [](const DisplacementField3& v) { return v.grid; })
        .def("to_numpy", &field_to_array);

    py::class_<LabelMap3>(m, "LabelMap3")
        .def(py::init(&labels_from_array), py::arg("data"),
             py::arg("spacing") = std::array<double, 3>{1, 1, 1},
             py::arg("origin") = std::array<double, 3>{0, 0, 0})
        .def_property_readonly("grid", [](const LabelMap3& v) { return v.grid; })
        .def("to_numpy", &labels_to_array);

    py::class_<CineSequence>(m, "CineSequence")
        .def(py::init<>())
        .def_readwrite("frames", &CineSequence::frames)
        .def_readwrite("ed_index", &CineSequence::ed_index)
        .def_readwrite("es_index", &CineSequence::es_index)
        .def_readwrite("labels_ed", &CineSequence::labels_ed)
        .def_readwrite("labels_es", &CineSequence::labels_es);

    // volgrid
    m.def("trilinear_sample", &trilinear_sample, py::arg("volume"), py::arg("point_mm"));
    m.def("warp_volume", &warp_volume, py::arg("volume"), py::arg("field"));
    m.def("warp_labels", &warp_labels, py::arg("labels"), py::arg("field"));
    m.def("downsample", &downsample, py::arg("volume"), py::arg("factor"));
    m.def("upsample_field", &upsample_field, py::arg("field"), py::arg("target_grid"));
    m.def("accumulate_fields", &accumulate_fields, py::arg("fields"));

    // kinematics
    m.def(
        "deformation_gradient",
        [](const DisplacementField3& f) { return tensor_to_array(deformation_gradient(f)); },
        py::arg("field"));
    m.def(
        "jacobian_det",
        [](const DisplacementField3& f) { return volume_to_array(jacobian_det(deformation_gradient(f))); },
        py::arg("field"));
    m.def(
        "nhe_density",
        [](const DisplacementField3& f, double mu, double kappa, double j_floor) {
            const EnergyMaps maps = nhe_density(deformation_gradient(f), MaterialParams{mu, kappa}, j_floor);
            return py::make_tuple(volume_to_array(maps.phi_dis), volume_to_array(maps.phi_vol),
                                  volume_to_array(maps.phi), maps.fold_count);
        },
        py::arg("field"), py::arg("mu") = 2.0, py::arg("kappa") = 100.0, py::arg("j_floor") = 1e-6);
    m.def(
        "nhe_total",
        [](const DisplacementField3& f, double mu, double kappa) {
            return nhe_total(f, MaterialParams{mu, kappa});
        },
        py::arg("field"), py::arg("mu") = 2.0, py::arg("kappa") = 100.0);

    // similarity
    m.def("lncc_map", &lncc_map, py::arg("fixed"), py::arg("warped"), py::arg("window"),
          py::arg("eps") = 1e-5);
    m.def(
        "similarity_loss",
        [](const Volume3& fixed, const Volume3& warped, const std::vector<int>& windows, double eps) {
            SimConfig cfg;
            cfg.windows = windows;
            cfg.variance_eps = eps;
            return similarity_loss(fixed, warped, cfg);
        },
        py::arg("fixed"), py::arg("warped"), py::arg("windows") = std::vector<int>{9, 5, 3},
        py::arg("eps") = 1e-5);

    // registration
    m.def(
        "register_pair",
        [](const Volume3& fixed, const Volume3& moving, const std::string& config_json) {
            const RegResult r = register_pair(fixed, moving, reg_config_of(config_json));
            py::list losses;
            for (const StageLoss& s : r.per_stage_losses)
                losses.append(py::dict(py::arg("l_sim") = s.l_sim, py::arg("l_nhe") = s.l_nhe,
                                       py::arg("l") = s.l));
            return py::make_tuple(r.field,
                                  py::dict(py::arg("per_stage_losses") = losses,
                                           py::arg("fold_fraction") = r.fold_fraction,
                                           py::arg("iterations_used") = r.iterations_used));
        },
        py::arg("fixed"), py::arg("moving"), py::arg("config_json") = std::string());
    m.def(
        "gradient_check",
        [](int grid_size, int probes, double eps, const std::string& term, const std::string& config_json) {
            LossTerm t = LossTerm::Total;
            if (term == "sim") t = LossTerm::Similarity;
            else if (term == "nhe") t = LossTerm::Energy;
            else if (term != "total") throw ValidationError("term must be sim, nhe or total");
            return gradient_check(reg_config_of(config_json), grid_size, probes, eps, t);
        },
        py::arg("grid_size") = 12, py::arg("probes") = 50, py::arg("eps") = 1e-3,
        py::arg("term") = "total", py::arg("config_json") = std::string());

    // propagation / biomech
    m.def("dice", &dice, py::arg("a"), py::arg("b"), py::arg("label"));
    m.def(
        "multi_frame_segment",
        [](const CineSequence& seq, const std::string& target, int n_adjacent,
           const std::string& config_json, int lwv_window) {
            const CardiacPhase phase = target == "ed" ? CardiacPhase::ED : CardiacPhase::ES;
            return multi_frame_segment(seq, phase, n_adjacent, reg_config_of(config_json), lwv_window);
        },
        py::arg("seq"), py::arg("target") = "es", py::arg("n_adjacent") = 2,
        py::arg("config_json") = std::string(), py::arg("lwv_window") = 5);
    m.def(
        "phase_field",
        [](const CineSequence& seq, const std::string& phase, const std::string& config_json) {
            return phase_field(seq, phase == "ed" ? CardiacPhase::ED : CardiacPhase::ES,
                               reg_config_of(config_json));
        },
        py::arg("seq"), py::arg("phase"), py::arg("config_json") = std::string());
    m.def(
        "local_moduli",
        [](const DisplacementField3& field, double mu, double kappa, int window, double floor) {
            const ModuliMaps maps = local_moduli(field, MaterialParams{mu, kappa}, window, floor);
            return py::make_tuple(volume_to_array(maps.mu_map), volume_to_array(maps.kappa_map),
                                  labels_to_array(maps.validity_mask));
        },
        py::arg("field"), py::arg("mu") = 2.0, py::arg("kappa") = 100.0, py::arg("window") = 5,
        py::arg("floor") = 1e-8);

    // features
    m.def("canonical_feature_names", &canonical_feature_names);
    m.def("field_magnitude", &field_magnitude, py::arg("field"));
    m.def("label_volume", &label_volume, py::arg("labels"), py::arg("label"));
    m.def(
        "region_stats",
        [](const Volume3& map, const LabelMap3& labels, int label) {
            const RegionStats st = region_stats(map, labels, label);
            return py::make_tuple(st.mean, st.std_dev, st.p10, st.p90);
        },
        py::arg("map"), py::arg("labels"), py::arg("label"));
    m.def("split_acdc_labels", &split_acdc_labels, py::arg("lv_cavity"), py::arg("myocardium"),
          py::arg("rv_cavity"));

    // phantom
    py::class_<PhantomParams>(m, "PhantomParams")
        .def_readwrite("dims", &PhantomParams::dims)
        .def_readwrite("spacing", &PhantomParams::spacing)
        .def_readwrite("frames", &PhantomParams::frames)
        .def_readwrite("contraction_amplitude", &PhantomParams::contraction_amplitude)
        .def_readwrite("twist_amplitude_rad", &PhantomParams::twist_amplitude_rad)
        .def_readwrite("noise_sigma", &PhantomParams::noise_sigma)
        .def_property_readonly("ed_index", &PhantomParams::ed_index)
        .def_property_readonly("es_index", &PhantomParams::es_index);
    py::class_<PhantomCase>(m, "PhantomCase")
        .def_readonly("case_id", &PhantomCase::case_id)
        .def_readonly("class_label", &PhantomCase::class_label)
        .def_readonly("params", &PhantomCase::params)
        .def_readonly("seq", &PhantomCase::seq)
        .def_readonly("frame_labels", &PhantomCase::frame_labels);
    m.def("default_phantom_params", &default_phantom_params, py::arg("dims"),
          py::arg("spacing") = std::array<double, 3>{1, 1, 1}, py::arg("frames") = 10);
    m.def(
        "apply_preset",
        [](const PhantomParams& p, const std::string& preset) {
            return apply_preset(p, preset_from_name(preset));
        },
        py::arg("params"), py::arg("preset"));
    m.def("generate_case", &generate_case, py::arg("params"), py::arg("seed"));
    m.def("analytic_field", &analytic_field, py::arg("params"), py::arg("t_from"), py::arg("t_to"));

    // file I/O
    m.def("read_volume", [](const std::filesystem::path& p) {
        return std::visit([](auto&& v) { return py::cast(std::move(v)); }, read_volume(p));
    });
    m.def("write_volume", [](const std::filesystem::path& p, const Volume3& v) { write_volume(p, v); });
    m.def("write_volume",
          [](const std::filesystem::path& p, const DisplacementField3& v) { write_volume(p, v); });
    m.def("write_volume", [](const std::filesystem::path& p, const LabelMap3& v) { write_volume(p, v); });

    m.def("default_config_json", [] { return pipeline_config_to_json(default_pipeline_config()); });
}
