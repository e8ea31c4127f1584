#include "cardiomech/similarity.hpp"

#include <cmath>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

void SimConfig::validate() const {
    if (windows.empty()) throw ValidationError("SimConfig: windows must be non-empty");
    for (int w : windows) {
        if (w < 3 || w % 2 == 0)
            throw ValidationError("SimConfig: window " + std::to_string(w) + " must be odd and >= 3");
    }
    if (variance_eps < 0.0) throw ValidationError("SimConfig: variance_eps must be >= 0");
}

namespace {

void box_sum_axis(const std::vector<double>& src, std::vector<double>& dst, const GridSpec& g, int axis,
                  int radius) {
    const int nx = g.dims[0], ny = g.dims[1];
    const std::ptrdiff_t stride[3] = {1, nx, static_cast<std::ptrdiff_t>(nx) * ny};
    const int n_axis = g.dims[axis];
    const std::ptrdiff_t s = stride[axis];
    const int d1 = (axis + 1) % 3, d2 = (axis + 2) % 3;
    const std::ptrdiff_t nlines = static_cast<std::ptrdiff_t>(g.dims[d1]) * g.dims[d2];

    parallel_for(nlines, [&](std::ptrdiff_t line) {
        const int a1 = static_cast<int>(line % g.dims[d1]);
        const int a2 = static_cast<int>(line / g.dims[d1]);
        int ijk[3];
        ijk[axis] = 0;
        ijk[d1] = a1;
        ijk[d2] = a2;
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(g.index(ijk[0], ijk[1], ijk[2]));
        // Running truncated-window sum along the line.
        double acc = 0.0;
        for (int t = 0; t <= std::min(radius, n_axis - 1); ++t) acc += src[base + t * s];
        dst[base] = acc;
        for (int t = 1; t < n_axis; ++t) {
            const int enter = t + radius, leave = t - radius - 1;
            if (enter < n_axis) acc += src[base + enter * s];
            if (leave >= 0) acc -= src[base + leave * s];
            dst[base + t * s] = acc;
        }
    });
}

} // namespace

std::vector<double> box_sum(const std::vector<double>& src, const GridSpec& grid, int radius) {
    std::vector<double> a(src.size()), b(src.size());
    box_sum_axis(src, a, grid, 0, radius);
    box_sum_axis(a, b, grid, 1, radius);
    box_sum_axis(b, a, grid, 2, radius);
    return a;
}

namespace {

struct WindowStats {
    std::vector<double> count;  // truncated-window voxel counts
    std::vector<double> sf, sm, sff, smm, sfm;
};

WindowStats window_stats(const Volume3& fixed, const Volume3& warped, int window) {
    const GridSpec& g = fixed.grid;
    const int radius = window / 2;
    const std::size_t n = g.voxel_count();

    std::vector<double> ones(n, 1.0), ff(n), mm(n), fm(n);
    for (std::size_t v = 0; v < n; ++v) {
        ff[v] = fixed.data[v] * fixed.data[v];
        mm[v] = warped.data[v] * warped.data[v];
        fm[v] = fixed.data[v] * warped.data[v];
    }
    WindowStats st;
    st.count = box_sum(ones, g, radius);
    st.sf = box_sum(fixed.data, g, radius);
    st.sm = box_sum(warped.data, g, radius);
    st.sff = box_sum(ff, g, radius);
    st.smm = box_sum(mm, g, radius);
    st.sfm = box_sum(fm, g, radius);
    return st;
}

} // namespace

Volume3 lncc_map(const Volume3& fixed, const Volume3& warped, int window, double eps) {
    if (!fixed.grid.same_as(warped.grid)) throw ValidationError("lncc_map: grid mismatch");
    if (window < 3 || window % 2 == 0) throw ValidationError("lncc_map: window must be odd and >= 3");

    const WindowStats st = window_stats(fixed, warped, window);
    Volume3 out(fixed.grid);
    parallel_for(static_cast<std::ptrdiff_t>(out.data.size()), [&](std::ptrdiff_t i) {
        const std::size_t v = static_cast<std::size_t>(i);
        const double cnt = st.count[v];
        const double cross = st.sfm[v] - st.sf[v] * st.sm[v] / cnt;
        const double var_f = std::max(st.sff[v] - st.sf[v] * st.sf[v] / cnt, 0.0);
        const double var_m = std::max(st.smm[v] - st.sm[v] * st.sm[v] / cnt, 0.0);
        const double r = cross * cross / ((var_f + eps) * (var_m + eps));
        out.data[v] = std::clamp(r, 0.0, 1.0);
    });
    return out;
}

double similarity_loss(const Volume3& fixed, const Volume3& warped, const SimConfig& cfg) {
    cfg.validate();
    if (!fixed.grid.same_as(warped.grid)) throw ValidationError("similarity_loss: grid mismatch");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(fixed.grid.voxel_count());
    double loss = 0.0;
    for (int w : cfg.windows) {
        const Volume3 map = lncc_map(fixed, warped, w, cfg.variance_eps);
        loss -= deterministic_sum(n, [&](std::ptrdiff_t i) { return map.data[static_cast<std::size_t>(i)]; }) /
                static_cast<double>(n);
    }
    return loss / static_cast<double>(cfg.windows.size());
}

double similarity_loss_and_grad(const Volume3& fixed, const Volume3& warped, const SimConfig& cfg,
                                Volume3& grad_warped) {
    cfg.validate();
    if (!fixed.grid.same_as(warped.grid)) throw ValidationError("similarity_loss_and_grad: grid mismatch");
    const GridSpec& g = fixed.grid;
    const std::size_t n = g.voxel_count();
    grad_warped = Volume3(g);

    const double scale = -1.0 / (static_cast<double>(cfg.windows.size()) * static_cast<double>(n));
    double loss = 0.0;

    std::vector<double> ga(n), ga_fbar(n), gb(n), gb_mbar(n);
    for (int w : cfg.windows) {
        const int radius = w / 2;
        const WindowStats st = window_stats(fixed, warped, w);

        double map_sum = deterministic_sum(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
            const std::size_t v = static_cast<std::size_t>(i);
            const double cnt = st.count[v];
            const double fbar = st.sf[v] / cnt;
            const double mbar = st.sm[v] / cnt;
            const double cross = st.sfm[v] - st.sf[v] * st.sm[v] / cnt;
            const double raw_var_m = st.smm[v] - st.sm[v] * st.sm[v] / cnt;
            const double b = std::max(st.sff[v] - st.sf[v] * st.sf[v] / cnt, 0.0) + cfg.variance_eps;
            const double c = std::max(raw_var_m, 0.0) + cfg.variance_eps;
            const double map = cross * cross / (b * c);
            // d map / d m_k = GA*(f_k - fbar) - GB*(m_k - mbar), window-summed below.
            const double a_coef = 2.0 * cross / (b * c);
            const double b_coef = raw_var_m > 0.0 ? a_coef * cross / c : 0.0;
            ga[v] = a_coef;
            ga_fbar[v] = a_coef * fbar;
            gb[v] = b_coef;
            gb_mbar[v] = b_coef * mbar;
            return map;
        });
        loss -= map_sum / static_cast<double>(n);

        const std::vector<double> box_ga = box_sum(ga, g, radius);
        const std::vector<double> box_ga_fbar = box_sum(ga_fbar, g, radius);
        const std::vector<double> box_gb = box_sum(gb, g, radius);
        const std::vector<double> box_gb_mbar = box_sum(gb_mbar, g, radius);

        parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
            const std::size_t v = static_cast<std::size_t>(i);
            grad_warped.data[v] += scale * (fixed.data[v] * box_ga[v] - box_ga_fbar[v] -
                                            warped.data[v] * box_gb[v] + box_gb_mbar[v]);
        });
    }
    return loss / static_cast<double>(cfg.windows.size());
}

} // namespace cardiomech
