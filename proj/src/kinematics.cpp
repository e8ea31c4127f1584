#include "cardiomech/kinematics.hpp"

#include <cmath>

#include "cardiomech/errors.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

void MaterialParams::validate() const {
    if (!(mu > 0.0) || !(kappa > 0.0)) throw ValidationError("MaterialParams: mu and kappa must be positive");
}

TensorField3 deformation_gradient(const DisplacementField3& field) {
    const GridSpec& g = field.grid;
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] < 3) throw ValidationError("deformation_gradient: grid needs >= 3 voxels per axis");
    }
    TensorField3 out(g);
    const int nx = g.dims[0], ny = g.dims[1];
    const std::ptrdiff_t stride[3] = {1, nx, static_cast<std::ptrdiff_t>(nx) * ny};

    parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t idx) {
        const int ijk[3] = {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
                            static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny))};
        double* t = &out.data[9 * static_cast<std::size_t>(idx)];
        for (int col = 0; col < 3; ++col) {  // derivative axis
            const int n = g.dims[col];
            const double h = g.spacing[col];
            std::ptrdiff_t ia, ib;  // sample indices for (u(b) - u(a)) / span
            double span;
            if (ijk[col] == 0) {
                ia = idx;
                ib = idx + stride[col];
                span = h;
            } else if (ijk[col] == n - 1) {
                ia = idx - stride[col];
                ib = idx;
                span = h;
            } else {
                ia = idx - stride[col];
                ib = idx + stride[col];
                span = 2.0 * h;
            }
            for (int row = 0; row < 3; ++row) {
                const double du = field.data[3 * static_cast<std::size_t>(ib) + row] -
                                  field.data[3 * static_cast<std::size_t>(ia) + row];
                t[3 * row + col] = du / span + (row == col ? 1.0 : 0.0);
            }
        }
    });
    return out;
}

TensorField3 cauchy_green(const TensorField3& f, CauchyGreenSide side) {
    TensorField3 out(f.grid);
    parallel_for(static_cast<std::ptrdiff_t>(f.grid.voxel_count()), [&](std::ptrdiff_t idx) {
        const double* a = &f.data[9 * static_cast<std::size_t>(idx)];
        double* o = &out.data[9 * static_cast<std::size_t>(idx)];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                if (side == CauchyGreenSide::Right) {
                    // C = F^T F
                    for (int k = 0; k < 3; ++k) s += a[3 * k + r] * a[3 * k + c];
                } else {
                    // B = F F^T
                    for (int k = 0; k < 3; ++k) s += a[3 * r + k] * a[3 * c + k];
                }
                o[3 * r + c] = s;
            }
    });
    return out;
}

namespace {

double det3(const double* m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

} // namespace

InvariantMaps invariants(const TensorField3& c) {
    InvariantMaps out{Volume3(c.grid), Volume3(c.grid), Volume3(c.grid)};
    parallel_for(static_cast<std::ptrdiff_t>(c.grid.voxel_count()), [&](std::ptrdiff_t idx) {
        const double* m = &c.data[9 * static_cast<std::size_t>(idx)];
        const double tr = m[0] + m[4] + m[8];
        double tr_sq = 0.0;  // tr(C^2) = sum_ij C_ij C_ji
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) tr_sq += m[3 * r + k] * m[3 * k + r];
        const std::size_t v = static_cast<std::size_t>(idx);
        out.i1.data[v] = tr;
        out.i2.data[v] = 0.5 * (tr * tr - tr_sq);
        out.i3.data[v] = det3(m);
    });
    return out;
}

Volume3 jacobian_det(const TensorField3& f) {
    Volume3 out(f.grid);
    parallel_for(static_cast<std::ptrdiff_t>(f.grid.voxel_count()), [&](std::ptrdiff_t idx) {
        out.data[static_cast<std::size_t>(idx)] = det3(&f.data[9 * static_cast<std::size_t>(idx)]);
    });
    return out;
}

EnergyMaps nhe_density(const TensorField3& f, const MaterialParams& mat, double j_floor) {
    mat.validate();
    if (!(j_floor > 0.0)) throw ValidationError("nhe_density: j_floor must be positive");
    EnergyMaps out{Volume3(f.grid), Volume3(f.grid), Volume3(f.grid), 0};
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(f.grid.voxel_count());
    out.fold_count = static_cast<std::int64_t>(deterministic_sum(n, [&](std::ptrdiff_t idx) {
        const double* m = &f.data[9 * static_cast<std::size_t>(idx)];
        double i1c = 0.0;
        for (int e = 0; e < 9; ++e) i1c += m[e] * m[e];  // tr(F^T F)
        const double j = det3(m);
        const double jc = j > j_floor ? j : j_floor;
        const std::size_t v = static_cast<std::size_t>(idx);
        const double dis = i1c * std::pow(jc, -2.0 / 3.0) - 3.0;
        const double vol = (j - 1.0) * (j - 1.0);
        out.phi_dis.data[v] = dis;
        out.phi_vol.data[v] = vol;
        out.phi.data[v] = 0.5 * mat.mu * dis + 0.5 * mat.kappa * vol;
        return j <= j_floor ? 1.0 : 0.0;
    }));
    return out;
}

double nhe_total(const DisplacementField3& field, const MaterialParams& mat, double j_floor) {
    const TensorField3 f = deformation_gradient(field);
    const EnergyMaps maps = nhe_density(f, mat, j_floor);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(field.grid.voxel_count());
    const double sum = deterministic_sum(n, [&](std::ptrdiff_t i) { return maps.phi.data[static_cast<std::size_t>(i)]; });
    return sum / static_cast<double>(n);
}

} // namespace cardiomech
