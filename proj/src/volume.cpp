#include "cardiomech/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

namespace {

bool close_rel(double a, double b, double rel_tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) <= rel_tol * scale;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* op) {
    if (!a.same_as(b)) throw ValidationError(std::string(op) + ": grid mismatch");
}

} // namespace

bool GridSpec::same_as(const GridSpec& other, double rel_tol) const {
    if (dims != other.dims) return false;
    for (int a = 0; a < 3; ++a) {
        if (!close_rel(spacing[a], other.spacing[a], rel_tol)) return false;
        if (!close_rel(origin[a], other.origin[a], rel_tol)) return false;
    }
    return true;
}

void GridSpec::validate(const char* what) const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) throw ValidationError(std::string(what) + ": non-positive dimension");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw ValidationError(std::string(what) + ": non-positive spacing");
        if (!std::isfinite(origin[a])) throw ValidationError(std::string(what) + ": non-finite origin");
    }
}

double trilinear_sample(const Volume3& vol, const std::array<double, 3>& point_mm) {
    double value;
    std::array<double, 3> grad;
    trilinear_sample_grad(vol, point_mm, value, grad);
    return value;
}

void trilinear_sample_grad(const Volume3& vol, const std::array<double, 3>& point_mm, double& value,
                           std::array<double, 3>& grad) {
    const GridSpec& g = vol.grid;
    for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(point_mm[a])) throw ValidationError("trilinear_sample: non-finite point");
    }

    int i0[3];
    double f[3];       // fractional offset within the cell
    bool interior[3];  // false when clamped to a boundary plane
    for (int a = 0; a < 3; ++a) {
        const double t = g.to_voxel(point_mm[a], a);
        const int n = g.dims[a];
        if (t <= 0.0 || n == 1) {
            i0[a] = 0;
            f[a] = 0.0;
            interior[a] = false;
        } else if (t >= n - 1) {
            i0[a] = n - 1;
            f[a] = 0.0;
            interior[a] = false;
        } else {
            i0[a] = static_cast<int>(t);
            f[a] = t - i0[a];
            interior[a] = true;
        }
    }

    const int nx = g.dims[0];
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = static_cast<std::size_t>(nx) * g.dims[1];
    const std::size_t base = g.index(i0[0], i0[1], i0[2]);
    const std::size_t step[3] = {interior[0] ? sx : 0, interior[1] ? sy : 0, interior[2] ? sz : 0};

    const double* d = vol.data.data();
    const double c000 = d[base];
    const double c100 = d[base + step[0]];
    const double c010 = d[base + step[1]];
    const double c110 = d[base + step[0] + step[1]];
    const double c001 = d[base + step[2]];
    const double c101 = d[base + step[0] + step[2]];
    const double c011 = d[base + step[1] + step[2]];
    const double c111 = d[base + step[0] + step[1] + step[2]];

    const double fx = f[0], fy = f[1], fz = f[2];
    const double c00 = c000 + fx * (c100 - c000);
    const double c10 = c010 + fx * (c110 - c010);
    const double c01 = c001 + fx * (c101 - c001);
    const double c11 = c011 + fx * (c111 - c011);
    const double c0 = c00 + fy * (c10 - c00);
    const double c1 = c01 + fy * (c11 - c01);
    value = c0 + fz * (c1 - c0);

    // d/dx at fixed fy, fz
    const double gx0 = (c100 - c000) + fy * ((c110 - c010) - (c100 - c000));
    const double gx1 = (c101 - c001) + fy * ((c111 - c011) - (c101 - c001));
    grad[0] = interior[0] ? (gx0 + fz * (gx1 - gx0)) / g.spacing[0] : 0.0;
    const double gy0 = (c10 - c00);
    const double gy1 = (c11 - c01);
    grad[1] = interior[1] ? (gy0 + fz * (gy1 - gy0)) / g.spacing[1] : 0.0;
    grad[2] = interior[2] ? (c1 - c0) / g.spacing[2] : 0.0;
}

Volume3 warp_volume(const Volume3& vol, const DisplacementField3& field) {
    require_same_grid(vol.grid, field.grid, "warp_volume");
    const GridSpec& g = vol.grid;
    Volume3 out(g);
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t idx) {
        const int i = static_cast<int>(idx % nx);
        const int j = static_cast<int>((idx / nx) % ny);
        const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
        (void)nz;
        const std::array<double, 3> p = g.position(i, j, k);
        const std::size_t v = static_cast<std::size_t>(idx);
        const std::array<double, 3> q = {p[0] + field.data[3 * v], p[1] + field.data[3 * v + 1],
                                         p[2] + field.data[3 * v + 2]};
        out.data[v] = trilinear_sample(vol, q);
    });
    return out;
}

LabelMap3 warp_labels(const LabelMap3& labels, const DisplacementField3& field) {
    require_same_grid(labels.grid, field.grid, "warp_labels");
    const GridSpec& g = labels.grid;
    LabelMap3 out(g);
    const int nx = g.dims[0], ny = g.dims[1];
    parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t idx) {
        const int i = static_cast<int>(idx % nx);
        const int j = static_cast<int>((idx / nx) % ny);
        const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
        const std::array<double, 3> p = g.position(i, j, k);
        const std::size_t v = static_cast<std::size_t>(idx);
        int src[3];
        for (int a = 0; a < 3; ++a) {
            const double t = g.to_voxel(p[a] + field.data[3 * v + a], a);
            // ceil(t - 0.5) rounds .5 ties toward the lower index
            int r = static_cast<int>(std::ceil(t - 0.5));
            r = std::clamp(r, 0, g.dims[a] - 1);
            src[a] = r;
        }
        out.data[v] = labels.data[g.index(src[0], src[1], src[2])];
    });
    return out;
}

GridSpec downsample_grid(const GridSpec& grid, int factor) {
    GridSpec out;
    for (int a = 0; a < 3; ++a) {
        out.dims[a] = (grid.dims[a] + factor - 1) / factor;
        out.spacing[a] = grid.spacing[a] * factor;
        out.origin[a] = grid.origin[a] + grid.spacing[a] * (factor - 1) * 0.5;
    }
    return out;
}

Volume3 downsample(const Volume3& vol, int factor) {
    if (factor < 1) throw ValidationError("downsample: factor must be >= 1");
    if (factor == 1) return vol;
    const GridSpec& g = vol.grid;
    const GridSpec cg = downsample_grid(g, factor);
    Volume3 out(cg);
    const int cnx = cg.dims[0], cny = cg.dims[1];
    parallel_for(static_cast<std::ptrdiff_t>(cg.voxel_count()), [&](std::ptrdiff_t idx) {
        const int ci = static_cast<int>(idx % cnx);
        const int cj = static_cast<int>((idx / cnx) % cny);
        const int ck = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(cnx) * cny));
        double sum = 0.0;
        int count = 0;
        const int i1 = std::min((ci + 1) * factor, g.dims[0]);
        const int j1 = std::min((cj + 1) * factor, g.dims[1]);
        const int k1 = std::min((ck + 1) * factor, g.dims[2]);
        for (int k = ck * factor; k < k1; ++k)
            for (int j = cj * factor; j < j1; ++j)
                for (int i = ci * factor; i < i1; ++i) {
                    sum += vol.data[g.index(i, j, k)];
                    ++count;
                }
        out.data[static_cast<std::size_t>(idx)] = sum / count;
    });
    return out;
}

DisplacementField3 upsample_field(const DisplacementField3& field, const GridSpec& target_grid) {
    const GridSpec& cg = field.grid;
    target_grid.validate("upsample_field");
    // Same physical extent, within half a coarse voxel per axis.
    for (int a = 0; a < 3; ++a) {
        const double half = 0.5 * cg.spacing[a] + 1e-9;
        const double c_lo = cg.origin[a];
        const double c_hi = cg.origin[a] + cg.spacing[a] * (cg.dims[a] - 1);
        const double t_lo = target_grid.origin[a];
        const double t_hi = target_grid.origin[a] + target_grid.spacing[a] * (target_grid.dims[a] - 1);
        if (std::fabs(c_lo - t_lo) > half || std::fabs(c_hi - t_hi) > half)
            throw ValidationError("upsample_field: physical extent mismatch");
    }

    DisplacementField3 out(target_grid);
    const int nx = target_grid.dims[0], ny = target_grid.dims[1];
    // Reuse the scalar sampler per component via lightweight views.
    Volume3 comp(cg);
    for (int c = 0; c < 3; ++c) {
        const std::size_t n = cg.voxel_count();
        for (std::size_t v = 0; v < n; ++v) comp.data[v] = field.data[3 * v + c];
        parallel_for(static_cast<std::ptrdiff_t>(target_grid.voxel_count()), [&](std::ptrdiff_t idx) {
            const int i = static_cast<int>(idx % nx);
            const int j = static_cast<int>((idx / nx) % ny);
            const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
            const std::array<double, 3> p = target_grid.position(i, j, k);
            out.data[3 * static_cast<std::size_t>(idx) + c] = trilinear_sample(comp, p);
        });
    }
    return out;
}

DisplacementField3 accumulate_fields(const std::vector<DisplacementField3>& fields) {
    if (fields.empty()) throw ValidationError("accumulate_fields: empty field list");
    DisplacementField3 out = fields.front();
    for (std::size_t f = 1; f < fields.size(); ++f) {
        require_same_grid(out.grid, fields[f].grid, "accumulate_fields");
        const std::vector<double>& src = fields[f].data;
        parallel_for(static_cast<std::ptrdiff_t>(out.data.size()),
                     [&](std::ptrdiff_t i) { out.data[static_cast<std::size_t>(i)] += src[static_cast<std::size_t>(i)]; });
    }
    return out;
}

namespace {

// One smoothing pass along `axis` with a normalized, boundary-renormalized kernel.
void smooth_axis(std::vector<double>& data, const GridSpec& g, int axis, double sigma_vox) {
    if (sigma_vox <= 0.0) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        kernel[t + radius] = std::exp(-0.5 * (t / sigma_vox) * (t / sigma_vox));
        ksum += kernel[t + radius];
    }
    for (double& k : kernel) k /= ksum;

    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    const std::ptrdiff_t stride[3] = {1, nx, static_cast<std::ptrdiff_t>(nx) * ny};
    const int n_axis = g.dims[axis];
    const std::ptrdiff_t s = stride[axis];

    // Enumerate lines perpendicular to `axis`.
    const int d1 = (axis + 1) % 3, d2 = (axis + 2) % 3;
    const std::ptrdiff_t nlines = static_cast<std::ptrdiff_t>(g.dims[d1]) * g.dims[d2];
    std::vector<double> src(data.size());
    src.swap(data);
    (void)nz;
    parallel_for(nlines, [&](std::ptrdiff_t line) {
        const int a1 = static_cast<int>(line % g.dims[d1]);
        const int a2 = static_cast<int>(line / g.dims[d1]);
        int ijk[3];
        ijk[axis] = 0;
        ijk[d1] = a1;
        ijk[d2] = a2;
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(g.index(ijk[0], ijk[1], ijk[2]));
        for (int t = 0; t < n_axis; ++t) {
            double acc = 0.0, wsum = 0.0;
            const int lo = std::max(-radius, -t), hi = std::min(radius, n_axis - 1 - t);
            for (int o = lo; o <= hi; ++o) {
                const double w = kernel[o + radius];
                acc += w * src[base + (t + o) * s];
                wsum += w;
            }
            data[base + t * s] = acc / wsum;
        }
    });
}

} // namespace

DisplacementField3 gaussian_smooth_field(const DisplacementField3& field, double sigma_mm) {
    if (sigma_mm <= 0.0) return field;
    const GridSpec& g = field.grid;
    DisplacementField3 out(g);
    const std::size_t n = g.voxel_count();
    std::vector<double> comp(n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t v = 0; v < n; ++v) comp[v] = field.data[3 * v + c];
        for (int axis = 0; axis < 3; ++axis) smooth_axis(comp, g, axis, sigma_mm / g.spacing[axis]);
        for (std::size_t v = 0; v < n; ++v) out.data[3 * v + c] = comp[v];
    }
    return out;
}

DisplacementField3 scale_field(const DisplacementField3& field, double factor) {
    DisplacementField3 out = field;
    for (double& v : out.data) v *= factor;
    return out;
}

DisplacementField3 add_fields(const DisplacementField3& a, const DisplacementField3& b) {
    require_same_grid(a.grid, b.grid, "add_fields");
    DisplacementField3 out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

} // namespace cardiomech
