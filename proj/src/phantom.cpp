#include "cardiomech/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/features.hpp"
#include "cardiomech/rng.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRvDiag = 0.70710678118654752;  // RV axis on the xy diagonal
}

const char* preset_name(ClassPreset preset) {
    switch (preset) {
        case ClassPreset::NOR: return "NOR";
        case ClassPreset::MINF: return "MINF";
        case ClassPreset::DCM: return "DCM";
        case ClassPreset::HCM: return "HCM";
        case ClassPreset::RV: return "RV";
    }
    return "NOR";
}

ClassPreset preset_from_name(const std::string& name) {
    for (ClassPreset p : {ClassPreset::NOR, ClassPreset::MINF, ClassPreset::DCM, ClassPreset::HCM,
                          ClassPreset::RV}) {
        if (name == preset_name(p)) return p;
    }
    throw ValidationError("unknown class preset '" + name + "'");
}

void PhantomParams::validate() const {
    GridSpec g{dims, spacing, {0, 0, 0}};
    g.validate("PhantomParams");
    if (frames < 3) throw ValidationError("PhantomParams: frames must be >= 3");
    if (!(lv_inner_radius_mm > 0.0) || !(lv_outer_radius_mm > lv_inner_radius_mm))
        throw ValidationError("PhantomParams: radii must satisfy 0 < inner < outer");
    if (!(rv_radius_mm > 0.0) || !(z_half_height_mm > 0.0))
        throw ValidationError("PhantomParams: RV radius and z half-height must be positive");
    if (contraction_amplitude < 0.0 || contraction_amplitude >= 1.0)
        throw ValidationError("PhantomParams: contraction_amplitude must be in [0, 1)");
    if (defect_amplitude < 0.0 || defect_amplitude > 1.0)
        throw ValidationError("PhantomParams: defect_amplitude must be in [0, 1]");
    if (wall_thickness_scale <= 0.0) throw ValidationError("PhantomParams: wall_thickness_scale must be > 0");
    if (noise_sigma < 0.0) throw ValidationError("PhantomParams: noise_sigma must be >= 0");
}

PhantomParams default_phantom_params(const std::array<int, 3>& dims, const std::array<double, 3>& spacing,
                                     int frames) {
    PhantomParams p;
    p.dims = dims;
    p.spacing = spacing;
    p.frames = frames;
    const double ex = (dims[0] - 1) * spacing[0];
    const double ey = (dims[1] - 1) * spacing[1];
    const double ez = (dims[2] - 1) * spacing[2];
    const double exy = std::min(ex, ey);
    p.lv_center_mm = {0.45 * ex, 0.5 * ey, 0.5 * ez};
    p.lv_inner_radius_mm = 0.087 * exy;
    p.lv_outer_radius_mm = 0.145 * exy;
    p.rv_radius_mm = 0.085 * exy;
    p.rv_center_offset_mm = p.lv_outer_effective_mm() + 0.5 * p.rv_radius_mm;
    p.z_half_height_mm = 0.24 * ez;
    return p;
}

PhantomParams apply_preset(PhantomParams params, ClassPreset preset) {
    params.preset = preset;
    switch (preset) {
        case ClassPreset::NOR:
            break;
        case ClassPreset::MINF:
            params.defect_amplitude = 0.5;  // contraction halved in one sector
            break;
        case ClassPreset::DCM:
            params.lv_inner_radius_mm *= 1.4;
            params.lv_outer_radius_mm *= 1.4;
            params.contraction_amplitude *= 0.6;
            break;
        case ClassPreset::HCM:
            params.wall_thickness_scale = 1.8;
            break;
        case ClassPreset::RV:
            params.rv_radius_mm *= 1.5;
            params.rv_contraction_scale *= 0.5;
            break;
    }
    params.rv_center_offset_mm = params.lv_outer_effective_mm() + 0.5 * params.rv_radius_mm;
    return params;
}

namespace {

// Planar contraction-plus-twist about an axis parallel to z. The core
// (r <= core_radius, the blood pool) compresses uniformly; the ring between
// core_radius and r1 squeezes inward area-preservingly via r' = sqrt(r^2 - a),
// so the tissue band stays isochoric and thickens the way incompressible
// muscle does; an affine blend returns to identity at r2. Every piece has a
// closed-form inverse. A smooth angular bump can reduce the pull over one
// material sector.
struct PlanarMap {
    double cx = 0.0, cy = 0.0;
    double core_radius = 1.0;
    double pull = 0.0;   // removed core area / pi; cavity radius maps to sqrt(core^2 - pull)
    double twist = 0.0;  // radians inside r1, tapering to 0 at r2
    double r1 = 2.0, r2 = 3.0;
    double defect = 0.0;
    double defect_center = 0.0;
    double defect_halfwidth = kPi / 3.0;

    double sector_pull(double phi) const {
        if (defect <= 0.0) return pull;
        double d = std::remainder(phi - defect_center, 2.0 * kPi);
        if (std::fabs(d) >= defect_halfwidth) return pull;
        const double bump = std::cos(kPi * d / (2.0 * defect_halfwidth));
        return pull * (1.0 - defect * bump * bump);
    }

    double taper(double r) const {
        if (r <= r1) return 1.0;
        if (r >= r2) return 0.0;
        const double t = (r2 - r) / (r2 - r1);
        return t * t * (3.0 - 2.0 * t);  // smoothstep, C1 at both ends
    }

    double radial_fwd(double r, double a) const {
        if (r >= r2) return r;
        const double beta = std::sqrt(1.0 - a / (core_radius * core_radius));
        if (r <= core_radius) return beta * r;
        const double a1 = std::sqrt(r1 * r1 - a);
        if (r <= r1) return std::sqrt(r * r - a);
        const double slope = (r2 - a1) / (r2 - r1);
        return a1 + (r - r1) * slope;
    }

    double radial_inv(double rp, double a) const {
        if (rp >= r2) return rp;
        const double beta = std::sqrt(1.0 - a / (core_radius * core_radius));
        if (rp <= beta * core_radius) return rp / beta;
        const double a1 = std::sqrt(r1 * r1 - a);
        if (rp <= a1) return std::sqrt(rp * rp + a);
        const double slope = (r2 - a1) / (r2 - r1);
        return r1 + (rp - a1) / slope;
    }

    void forward(double& x, double& y) const {
        if (pull == 0.0 && twist == 0.0) return;
        const double dx = x - cx, dy = y - cy;
        const double r = std::hypot(dx, dy);
        if (r < 1e-12) return;
        const double phi = std::atan2(dy, dx);
        const double rp = radial_fwd(r, sector_pull(phi));
        const double phip = phi + twist * taper(r);
        x = cx + rp * std::cos(phip);
        y = cy + rp * std::sin(phip);
    }

    void inverse(double& x, double& y) const {
        if (pull == 0.0 && twist == 0.0) return;
        const double dx = x - cx, dy = y - cy;
        const double rp = std::hypot(dx, dy);
        if (rp < 1e-12) return;
        const double phip = std::atan2(dy, dx);
        // Material radius and angle by fixed point; exact after one pass when
        // either the twist or the sector defect is absent.
        double phi = phip, r = rp;
        for (int it = 0; it < 12; ++it) {
            r = radial_inv(rp, sector_pull(phi));
            phi = phip - twist * taper(r);
        }
        x = cx + r * std::cos(phi);
        y = cy + r * std::sin(phi);
    }
};

struct MotionModel {
    PlanarMap lv, rv;
    bool has_rv = false;

    std::array<double, 3> forward(std::array<double, 3> p) const {
        if (has_rv) rv.forward(p[0], p[1]);
        lv.forward(p[0], p[1]);
        return p;
    }
    std::array<double, 3> inverse(std::array<double, 3> p) const {
        lv.inverse(p[0], p[1]);
        if (has_rv) rv.inverse(p[0], p[1]);
        return p;
    }
};

double cycle_amplitude(int t, int frames) {
    return 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(frames)));
}

// pull for a cavity whose radius shrinks by fraction c
double pull_of(double core_radius, double c) {
    const double beta = 1.0 - c;
    return core_radius * core_radius * (1.0 - beta * beta);
}

MotionModel motion_at(const PhantomParams& p, int t) {
    const double s = cycle_amplitude(t, p.frames);
    const double outer = p.lv_outer_effective_mm();
    const double min_spacing = std::min({p.spacing[0], p.spacing[1], p.spacing[2]});
    // the isochoric ring reaches past every label (RV tip plus the shell)
    const double label_reach = std::max(outer, p.rv_center_offset_mm + p.rv_radius_mm);
    MotionModel m;
    m.lv.cx = p.lv_center_mm[0];
    m.lv.cy = p.lv_center_mm[1];
    m.lv.core_radius = p.lv_inner_radius_mm;
    m.lv.pull = pull_of(p.lv_inner_radius_mm, p.contraction_amplitude * s);
    m.lv.twist = p.twist_amplitude_rad * s;
    m.lv.r1 = label_reach + 4.0 * min_spacing;
    m.lv.r2 = m.lv.r1 + 0.8 * outer;
    m.lv.defect = p.defect_amplitude;
    m.lv.defect_center = kPi / 4.0;  // sector faces the RV attachment

    m.has_rv = p.rv_contraction_scale > 0.0;
    m.rv.cx = p.lv_center_mm[0] + kRvDiag * p.rv_center_offset_mm;
    m.rv.cy = p.lv_center_mm[1] + kRvDiag * p.rv_center_offset_mm;
    m.rv.core_radius = p.rv_radius_mm;
    m.rv.pull = pull_of(p.rv_radius_mm, p.contraction_amplitude * p.rv_contraction_scale * s);
    m.rv.twist = 0.0;
    m.rv.r1 = 1.4 * p.rv_radius_mm;
    m.rv.r2 = 2.2 * p.rv_radius_mm;
    return m;
}

// Reference-frame anatomy at a physical point: 0 background, 1 LV cavity,
// 2 myocardium, 3 RV cavity.
int region_of(const PhantomParams& p, const std::array<double, 3>& x) {
    if (std::fabs(x[2] - p.lv_center_mm[2]) > p.z_half_height_mm) return 0;
    const double r_lv = std::hypot(x[0] - p.lv_center_mm[0], x[1] - p.lv_center_mm[1]);
    const double outer = p.lv_outer_effective_mm();
    if (r_lv < p.lv_inner_radius_mm) return 1;
    if (r_lv < outer) return 2;
    const double r_rv = std::hypot(x[0] - (p.lv_center_mm[0] + kRvDiag * p.rv_center_offset_mm),
                                   x[1] - (p.lv_center_mm[1] + kRvDiag * p.rv_center_offset_mm));
    if (r_rv < p.rv_radius_mm) return 3;
    return 0;
}

struct Texture {
    std::vector<std::array<double, 4>> waves;  // kx, ky, kz, phase
    double amplitude = 0.0;

    double eval(const std::array<double, 3>& x) const {
        double v = 0.0;
        for (const auto& w : waves) v += std::cos(w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3]);
        return amplitude * v;
    }
};

Texture make_texture(const PhantomParams& p, std::uint64_t seed) {
    Texture tex;
    const int n_waves = 60;
    const double min_spacing = std::min({p.spacing[0], p.spacing[1], p.spacing[2]});
    const double extent = std::min({(p.dims[0] - 1) * p.spacing[0], (p.dims[1] - 1) * p.spacing[1],
                                    (p.dims[2] - 1) * p.spacing[2]});
    // Wavelengths log-uniform between ~6 voxels and the volume extent, so
    // every level of the registration pyramid sees unaliased structure.
    const double lambda_min = 4.0 * min_spacing;
    const double lambda_max = std::max(extent, 2.0 * lambda_min);
    Rng rng(seed);
    for (int w = 0; w < n_waves; ++w) {
        const double lambda = lambda_min * std::exp(rng.uniform(0.0, std::log(lambda_max / lambda_min)));
        const double kmag = 2.0 * kPi / lambda;
        // uniform random direction
        double dx = 0.0, dy = 0.0, dz = 0.0, norm = 0.0;
        do {
            dx = rng.uniform(-1.0, 1.0);
            dy = rng.uniform(-1.0, 1.0);
            dz = rng.uniform(-1.0, 1.0);
            norm = std::sqrt(dx * dx + dy * dy + dz * dz);
        } while (norm < 1e-3 || norm > 1.0);
        tex.waves.push_back({kmag * dx / norm, kmag * dy / norm, kmag * dz / norm,
                             rng.uniform(0.0, 2.0 * kPi)});
    }
    tex.amplitude = 12.0 * std::sqrt(2.0 / n_waves);
    return tex;
}

double base_intensity(int region) {
    switch (region) {
        case 1: return 185.0;  // LV blood pool
        case 2: return 105.0;  // myocardium
        case 3: return 170.0;  // RV blood pool
        default: return 55.0;
    }
}

LabelMap3 reference_labels(const PhantomParams& p, const GridSpec& g) {
    LabelMap3 lv_cav(g), myo(g), rv_cav(g);
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                switch (region_of(p, g.position(i, j, k))) {
                    case 1: lv_cav.at(i, j, k) = 1; break;
                    case 2: myo.at(i, j, k) = 1; break;
                    case 3: rv_cav.at(i, j, k) = 1; break;
                    default: break;
                }
            }
    return split_acdc_labels(lv_cav, myo, rv_cav);
}

void check_margin(const LabelMap3& labels, int margin) {
    const auto& d = labels.grid.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                if (!labels.at(i, j, k)) continue;
                if (i < margin || j < margin || k < margin || i >= d[0] - margin || j >= d[1] - margin ||
                    k >= d[2] - margin)
                    throw ValidationError("phantom geometry touches the volume boundary margin");
            }
}

std::size_t nearest_index(const GridSpec& g, const std::array<double, 3>& x) {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        const double t = g.to_voxel(x[a], a);
        int r = static_cast<int>(std::ceil(t - 0.5));
        if (r < 0) r = 0;
        if (r > g.dims[a] - 1) r = g.dims[a] - 1;
        idx[a] = r;
    }
    return g.index(idx[0], idx[1], idx[2]);
}

} // namespace

std::array<double, 3> analytic_displacement(const PhantomParams& params, int t_from, int t_to,
                                            const std::array<double, 3>& point_mm) {
    if (t_from == t_to) return {0.0, 0.0, 0.0};
    const MotionModel from = motion_at(params, t_from);
    const MotionModel to = motion_at(params, t_to);
    const std::array<double, 3> material = to.inverse(point_mm);
    const std::array<double, 3> source = from.forward(material);
    return {source[0] - point_mm[0], source[1] - point_mm[1], source[2] - point_mm[2]};
}

DisplacementField3 analytic_field(const PhantomParams& params, int t_from, int t_to) {
    params.validate();
    if (t_from < 0 || t_from >= params.frames || t_to < 0 || t_to >= params.frames)
        throw ValidationError("analytic_field: frame index out of range");
    GridSpec g{params.dims, params.spacing, {0, 0, 0}};
    DisplacementField3 out(g);
    if (t_from == t_to) return out;

    const MotionModel from = motion_at(params, t_from);
    const MotionModel to = motion_at(params, t_to);
    const int nx = g.dims[0], ny = g.dims[1];
    parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t idx) {
        const int i = static_cast<int>(idx % nx);
        const int j = static_cast<int>((idx / nx) % ny);
        const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
        const std::array<double, 3> x = g.position(i, j, k);
        const std::array<double, 3> src = from.forward(to.inverse(x));
        const std::size_t v = static_cast<std::size_t>(idx);
        out.data[3 * v] = src[0] - x[0];
        out.data[3 * v + 1] = src[1] - x[1];
        out.data[3 * v + 2] = src[2] - x[2];
    });
    return out;
}

PhantomCase generate_case(const PhantomParams& params, std::uint64_t seed) {
    params.validate();
    GridSpec g{params.dims, params.spacing, {0, 0, 0}};

    PhantomCase out;
    out.class_label = preset_name(params.preset);
    out.params = params;

    const LabelMap3 ref_labels = reference_labels(params, g);
    check_margin(ref_labels, 4);

    const Texture tex = make_texture(params, params.texture_seed ^ (seed * 0x9e3779b97f4a7c15ull));

    out.seq.frames.reserve(static_cast<std::size_t>(params.frames));
    out.frame_labels.reserve(static_cast<std::size_t>(params.frames));
    const int nx = g.dims[0], ny = g.dims[1];
    for (int t = 0; t < params.frames; ++t) {
        const MotionModel motion = motion_at(params, t);
        Volume3 frame(g);
        LabelMap3 labels(g);
        parallel_for(static_cast<std::ptrdiff_t>(g.voxel_count()), [&](std::ptrdiff_t idx) {
            const int i = static_cast<int>(idx % nx);
            const int j = static_cast<int>((idx / nx) % ny);
            const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
            const std::array<double, 3> x = g.position(i, j, k);
            const std::array<double, 3> material = t == 0 ? x : motion.inverse(x);
            const std::size_t v = static_cast<std::size_t>(idx);
            frame.data[v] = base_intensity(region_of(params, material)) + tex.eval(material);
            labels.data[v] = t == 0 ? ref_labels.data[v] : ref_labels.data[nearest_index(g, material)];
        });
        if (t > 0 && params.noise_sigma > 0.0) {
            Rng noise(seed ^ (0xbf58476d1ce4e5b9ull * static_cast<std::uint64_t>(t + 1)));
            for (double& vv : frame.data) vv += noise.normal(0.0, params.noise_sigma);
        }
        out.seq.frames.push_back(std::move(frame));
        out.frame_labels.push_back(std::move(labels));
    }
    out.seq.ed_index = params.ed_index();
    out.seq.es_index = params.es_index();
    out.seq.labels_ed = out.frame_labels[static_cast<std::size_t>(out.seq.ed_index)];
    out.seq.labels_es = out.frame_labels[static_cast<std::size_t>(out.seq.es_index)];
    out.seq.validate();
    return out;
}

std::vector<PhantomCase> generate_cohort(int n_per_class, const PhantomParams& base_params,
                                         std::uint64_t seed) {
    if (n_per_class < 1) throw ValidationError("generate_cohort: n_per_class must be >= 1");
    std::vector<PhantomCase> cohort;
    Rng rng(seed ^ 0x2545f4914f6cdd1dull);
    int case_counter = 0;
    for (ClassPreset preset : {ClassPreset::NOR, ClassPreset::MINF, ClassPreset::DCM, ClassPreset::HCM,
                               ClassPreset::RV}) {
        for (int c = 0; c < n_per_class; ++c) {
            PhantomParams p = apply_preset(base_params, preset);
            // +-10% jitter on radii and amplitudes; contact geometry re-derived.
            const double wall = (p.lv_outer_radius_mm - p.lv_inner_radius_mm) * rng.uniform(0.9, 1.1);
            p.lv_inner_radius_mm *= rng.uniform(0.9, 1.1);
            p.lv_outer_radius_mm = p.lv_inner_radius_mm + wall;
            p.rv_radius_mm *= rng.uniform(0.9, 1.1);
            p.contraction_amplitude *= rng.uniform(0.9, 1.1);
            p.twist_amplitude_rad *= rng.uniform(0.9, 1.1);
            p.rv_center_offset_mm = p.lv_outer_effective_mm() + 0.5 * p.rv_radius_mm;
            p.texture_seed = rng.next_u64();

            char case_id[32];
            std::snprintf(case_id, sizeof(case_id), "%s_%03d", preset_name(preset), c);
            PhantomCase pc = generate_case(p, rng.next_u64());
            pc.case_id = case_id;
            cohort.push_back(std::move(pc));
            ++case_counter;
        }
    }
    (void)case_counter;
    return cohort;
}

} // namespace cardiomech
