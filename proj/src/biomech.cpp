#include "cardiomech/biomech.hpp"

#include <cmath>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/similarity.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

void CineSequence::validate() const {
    if (frames.size() < 2) throw ValidationError("CineSequence: need at least 2 frames");
    const int n = static_cast<int>(frames.size());
    if (ed_index < 0 || ed_index >= n || es_index < 0 || es_index >= n || ed_index == es_index)
        throw ValidationError("CineSequence: ED/ES indices must be valid and distinct");
    for (const Volume3& f : frames) {
        if (!f.grid.same_as(frames[0].grid)) throw ValidationError("CineSequence: frames on different grids");
    }
    if (!labels_ed.grid.same_as(frames[0].grid) || !labels_es.grid.same_as(frames[0].grid))
        throw ValidationError("CineSequence: labels on a different grid");
}

DisplacementField3 temporal_mean_field(const DisplacementField3& f_prev, const DisplacementField3& f_next) {
    if (!f_prev.grid.same_as(f_next.grid)) throw ValidationError("temporal_mean_field: grid mismatch");
    DisplacementField3 out(f_prev.grid);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = 0.5 * (f_prev.data[i] + f_next.data[i]);
    return out;
}

ModuliMaps moduli_from_energy(const Volume3& phi_dis, const Volume3& phi_vol, const MaterialParams& mat,
                              int window, double energy_floor) {
    mat.validate();
    if (!phi_dis.grid.same_as(phi_vol.grid)) throw ValidationError("moduli_from_energy: grid mismatch");
    if (window < 3 || window % 2 == 0) throw ValidationError("moduli_from_energy: window must be odd and >= 3");
    if (!(energy_floor > 0.0)) throw ValidationError("moduli_from_energy: energy_floor must be positive");

    const GridSpec& g = phi_dis.grid;
    const int radius = window / 2;
    std::vector<double> ones(g.voxel_count(), 1.0);
    const std::vector<double> counts = box_sum(ones, g, radius);
    const std::vector<double> sum_dis = box_sum(phi_dis.data, g, radius);
    const std::vector<double> sum_vol = box_sum(phi_vol.data, g, radius);

    ModuliMaps out{Volume3(g), Volume3(g), LabelMap3(g)};
    parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t i) {
        const std::size_t v = static_cast<std::size_t>(i);
        const bool dis_ok = phi_dis.data[v] > energy_floor;
        const bool vol_ok = phi_vol.data[v] > energy_floor;
        out.mu_map.data[v] = dis_ok ? mat.mu * (sum_dis[v] / counts[v]) / phi_dis.data[v] : mat.mu;
        out.kappa_map.data[v] = vol_ok ? mat.kappa * (sum_vol[v] / counts[v]) / phi_vol.data[v] : mat.kappa;
        out.validity_mask.data[v] = (dis_ok && vol_ok) ? 1 : 0;
    });
    return out;
}

ModuliMaps local_moduli(const DisplacementField3& field, const MaterialParams& mat, int window,
                        double energy_floor) {
    const TensorField3 f = deformation_gradient(field);
    const EnergyMaps maps = nhe_density(f, mat);
    return moduli_from_energy(maps.phi_dis, maps.phi_vol, mat, window, energy_floor);
}

DisplacementField3 phase_field(const CineSequence& seq, CardiacPhase phase, const RegConfig& cfg) {
    seq.validate();
    const int t = phase == CardiacPhase::ED ? seq.ed_index : seq.es_index;
    const int last = static_cast<int>(seq.frames.size()) - 1;
    const bool has_prev = t > 0, has_next = t < last;
    if (!has_prev && !has_next) throw ValidationError("phase_field: phase frame has no temporal neighbours");

    // register(fixed=t, moving=t-1) points backward in time; negate it so
    // both halves describe motion forward through the phase frame.
    if (has_prev && has_next) {
        const DisplacementField3 from_prev =
            scale_field(register_pair(seq.frames[static_cast<std::size_t>(t)],
                                      seq.frames[static_cast<std::size_t>(t - 1)], cfg)
                            .field,
                        -1.0);
        const DisplacementField3 to_next = register_pair(seq.frames[static_cast<std::size_t>(t)],
                                                         seq.frames[static_cast<std::size_t>(t + 1)], cfg)
                                               .field;
        return temporal_mean_field(from_prev, to_next);
    }
    if (has_next) {
        return register_pair(seq.frames[static_cast<std::size_t>(t)],
                             seq.frames[static_cast<std::size_t>(t + 1)], cfg)
            .field;
    }
    return scale_field(register_pair(seq.frames[static_cast<std::size_t>(t)],
                                     seq.frames[static_cast<std::size_t>(t - 1)], cfg)
                           .field,
                       -1.0);
}

} // namespace cardiomech
