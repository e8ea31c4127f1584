#include "cardiomech/registration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/rng.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

namespace {
constexpr double kJFloor = 1e-6;
}

void RegConfig::validate() const {
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const RegStage& st = stages[s];
        if (st.scale_factor < 1) throw ValidationError("RegConfig: scale_factor must be >= 1");
        if (st.iterations < 0) throw ValidationError("RegConfig: iterations must be >= 0");
        if (!(st.step_size > 0.0)) throw ValidationError("RegConfig: step_size must be > 0");
        if (s > 0 && st.scale_factor > stages[s - 1].scale_factor)
            throw ValidationError("RegConfig: stages must be ordered coarse to fine");
    }
    if (!stages.empty() && stages.back().scale_factor != 1)
        throw ValidationError("RegConfig: stages must end at scale_factor 1");
    if (lambda < 0.0) throw ValidationError("RegConfig: lambda must be >= 0");
    if (field_smoothing_sigma_mm < 0.0) throw ValidationError("RegConfig: field_smoothing_sigma_mm must be >= 0");
    if (!(convergence_tol >= 0.0)) throw ValidationError("RegConfig: convergence_tol must be >= 0");
    material.validate();
    sim.validate();
}

namespace {

// Mean Neo-Hookean density of the field plus, optionally, its gradient with
// respect to the displacement components (adjoint of the difference stencil).
double nhe_loss_and_grad(const DisplacementField3& field, const MaterialParams& mat,
                         DisplacementField3* grad) {
    const GridSpec& g = field.grid;
    const std::size_t n = g.voxel_count();
    const TensorField3 f = deformation_gradient(field);

    // P(p) = d(phi(p)/N) / dF
    std::vector<double> p_tensor(grad ? 9 * n : 0);
    const double inv_n = 1.0 / static_cast<double>(n);

    const double loss = deterministic_sum(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t idx) {
        const double* m = &f.data[9 * static_cast<std::size_t>(idx)];
        double i1c = 0.0;
        for (int e = 0; e < 9; ++e) i1c += m[e] * m[e];
        const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                           m[2] * (m[3] * m[7] - m[4] * m[6]);
        const double jc = det > kJFloor ? det : kJFloor;
        const double jpow = std::pow(jc, -2.0 / 3.0);
        const double phi =
            0.5 * mat.mu * (i1c * jpow - 3.0) + 0.5 * mat.kappa * (det - 1.0) * (det - 1.0);

        if (grad) {
            // cofactor(F) = dJ/dF
            double cof[9];
            cof[0] = m[4] * m[8] - m[5] * m[7];
            cof[1] = m[5] * m[6] - m[3] * m[8];
            cof[2] = m[3] * m[7] - m[4] * m[6];
            cof[3] = m[2] * m[7] - m[1] * m[8];
            cof[4] = m[0] * m[8] - m[2] * m[6];
            cof[5] = m[1] * m[6] - m[0] * m[7];
            cof[6] = m[1] * m[5] - m[2] * m[4];
            cof[7] = m[2] * m[3] - m[0] * m[5];
            cof[8] = m[0] * m[4] - m[1] * m[3];
            const double d_dis_j = det > kJFloor ? -(2.0 / 3.0) * i1c * jpow / jc : 0.0;
            const double c_f = 0.5 * mat.mu * 2.0 * jpow;                                  // on F
            const double c_cof = 0.5 * mat.mu * d_dis_j + mat.kappa * (det - 1.0);         // on cof(F)
            double* pt = &p_tensor[9 * static_cast<std::size_t>(idx)];
            for (int e = 0; e < 9; ++e) pt[e] = inv_n * (c_f * m[e] + c_cof * cof[e]);
        }
        return phi * inv_n;
    });

    if (grad) {
        *grad = DisplacementField3(g);
        const int nx = g.dims[0], ny = g.dims[1];
        const std::ptrdiff_t stride[3] = {1, nx, static_cast<std::ptrdiff_t>(nx) * ny};
        parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t idx) {
            const int ijk[3] = {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
                                static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny))};
            double acc[3] = {0.0, 0.0, 0.0};
            for (int ax = 0; ax < 3; ++ax) {
                const int na = g.dims[ax];
                const double inv_h = 1.0 / g.spacing[ax];
                const int q = ijk[ax];
                // Contribution from this voxel's own one-sided stencil.
                if (q == 0) {
                    const double* pt = &p_tensor[9 * static_cast<std::size_t>(idx)];
                    for (int r = 0; r < 3; ++r) acc[r] -= pt[3 * r + ax] * inv_h;
                } else if (q == na - 1) {
                    const double* pt = &p_tensor[9 * static_cast<std::size_t>(idx)];
                    for (int r = 0; r < 3; ++r) acc[r] += pt[3 * r + ax] * inv_h;
                }
                // Neighbour at q - 1 references u here with weight +.
                if (q >= 1) {
                    const std::ptrdiff_t pi = idx - stride[ax];
                    const double w = (q - 1 == 0) ? inv_h : 0.5 * inv_h;
                    const double* pt = &p_tensor[9 * static_cast<std::size_t>(pi)];
                    for (int r = 0; r < 3; ++r) acc[r] += pt[3 * r + ax] * w;
                }
                // Neighbour at q + 1 references u here with weight -.
                if (q <= na - 2) {
                    const std::ptrdiff_t pi = idx + stride[ax];
                    const double w = (q + 1 == na - 1) ? inv_h : 0.5 * inv_h;
                    const double* pt = &p_tensor[9 * static_cast<std::size_t>(pi)];
                    for (int r = 0; r < 3; ++r) acc[r] -= pt[3 * r + ax] * w;
                }
            }
            for (int r = 0; r < 3; ++r) grad->data[3 * static_cast<std::size_t>(idx) + r] = acc[r];
        });
    }
    return loss;
}

struct EvalFlags {
    bool sim = true;
    bool nhe = true;
    double nhe_weight = 1.0;  // lambda for Total, 1.0 for the pure-energy term
};

StageLoss evaluate_loss(const Volume3& fixed, const Volume3& moving, const DisplacementField3& total,
                        const RegConfig& cfg, const EvalFlags& flags, DisplacementField3* grad) {
    const GridSpec& g = fixed.grid;
    const std::size_t n = g.voxel_count();
    StageLoss parts;
    if (grad) *grad = DisplacementField3(g);

    if (flags.sim) {
        Volume3 warped(g);
        std::vector<double> sample_grad(grad ? 3 * n : 0);
        const int nx = g.dims[0], ny = g.dims[1];
        parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t idx) {
            const int i = static_cast<int>(idx % nx);
            const int j = static_cast<int>((idx / nx) % ny);
            const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(nx) * ny));
            const std::array<double, 3> p = g.position(i, j, k);
            const std::size_t v = static_cast<std::size_t>(idx);
            const std::array<double, 3> q = {p[0] + total.data[3 * v], p[1] + total.data[3 * v + 1],
                                             p[2] + total.data[3 * v + 2]};
            if (grad) {
                std::array<double, 3> sg;
                trilinear_sample_grad(moving, q, warped.data[v], sg);
                sample_grad[3 * v] = sg[0];
                sample_grad[3 * v + 1] = sg[1];
                sample_grad[3 * v + 2] = sg[2];
            } else {
                warped.data[v] = trilinear_sample(moving, q);
            }
        });
        if (grad) {
            Volume3 grad_warped;
            parts.l_sim = similarity_loss_and_grad(fixed, warped, cfg.sim, grad_warped);
            parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t idx) {
                const std::size_t v = static_cast<std::size_t>(idx);
                for (int c = 0; c < 3; ++c)
                    grad->data[3 * v + c] += grad_warped.data[v] * sample_grad[3 * v + c];
            });
        } else {
            parts.l_sim = similarity_loss(fixed, warped, cfg.sim);
        }
    }

    if (flags.nhe && flags.nhe_weight != 0.0) {
        DisplacementField3 nhe_grad;
        parts.l_nhe = nhe_loss_and_grad(total, cfg.material, grad ? &nhe_grad : nullptr);
        if (grad) {
            parallel_for(static_cast<std::ptrdiff_t>(grad->data.size()), [&](std::ptrdiff_t i) {
                grad->data[static_cast<std::size_t>(i)] +=
                    flags.nhe_weight * nhe_grad.data[static_cast<std::size_t>(i)];
            });
        }
    } else if (flags.nhe) {
        // Pure similarity run: the energy term is skipped entirely so lambda=0
        // is bit-identical to a build without it. l_nhe is still reported.
        parts.l_nhe = nhe_loss_and_grad(total, cfg.material, nullptr);
    }

    parts.l = (flags.sim ? parts.l_sim : 0.0) + flags.nhe_weight * (flags.nhe ? parts.l_nhe : 0.0);
    return parts;
}

} // namespace

StageLoss loss_and_gradient(const Volume3& fixed, const Volume3& moving,
                            const DisplacementField3& accumulated_field,
                            const DisplacementField3& increment, const RegConfig& cfg,
                            DisplacementField3& gradient) {
    if (!fixed.grid.same_as(moving.grid) || !fixed.grid.same_as(accumulated_field.grid) ||
        !fixed.grid.same_as(increment.grid))
        throw ValidationError("loss_and_gradient: grid mismatch");
    const DisplacementField3 total = add_fields(accumulated_field, increment);
    EvalFlags flags;
    flags.nhe_weight = cfg.lambda;
    return evaluate_loss(fixed, moving, total, cfg, flags, &gradient);
}

namespace {

// Adaptive-moment minimization of one stage increment with monotone
// acceptance: a step that raises the loss is rejected and the step size
// halved, up to five times, after which the stage stops.
struct StageOutcome {
    StageLoss final_loss;
    int iterations = 0;
    std::vector<double> accepted_losses;
};

StageOutcome optimize_stage(const Volume3& fixed, const Volume3& moving,
                            const DisplacementField3& accumulated, DisplacementField3& inc,
                            const RegStage& stage, const RegConfig& cfg, const EvalFlags& flags) {
    const std::size_t ncomp = inc.data.size();
    std::vector<double> m(ncomp, 0.0);
    double v = 0.0;  // global second-moment scalar: keeps steps spatially smooth
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double lr = stage.step_size;

    DisplacementField3 grad;
    DisplacementField3 total = add_fields(accumulated, inc);
    StageLoss cur = evaluate_loss(fixed, moving, total, cfg, flags, &grad);
    if (!std::isfinite(cur.l)) throw NumericError("register: non-finite initial loss");

    StageOutcome out;
    out.final_loss = cur;
    out.accepted_losses.push_back(cur.l);

    for (int it = 1; it <= stage.iterations; ++it) {
        if (cfg.field_smoothing_sigma_mm > 0.0) grad = gaussian_smooth_field(grad, cfg.field_smoothing_sigma_mm);

        const double bc1 = 1.0 - std::pow(beta1, it);
        const double bc2 = 1.0 - std::pow(beta2, it);
        parallel_for(static_cast<std::ptrdiff_t>(ncomp), [&](std::ptrdiff_t i) {
            const std::size_t c = static_cast<std::size_t>(i);
            m[c] = beta1 * m[c] + (1.0 - beta1) * grad.data[c];
        });
        const double grad_ms = deterministic_sum(static_cast<std::ptrdiff_t>(ncomp),
                                                 [&](std::ptrdiff_t i) {
                                                     const double gg = grad.data[static_cast<std::size_t>(i)];
                                                     return gg * gg;
                                                 }) /
                               static_cast<double>(ncomp);
        v = beta2 * v + (1.0 - beta2) * grad_ms;

        bool accepted = false;
        StageLoss cand_loss;
        DisplacementField3 cand(inc.grid);
        for (int halving = 0; halving <= 5; ++halving) {
            const double denom = std::sqrt(v / bc2) + adam_eps;
            parallel_for(static_cast<std::ptrdiff_t>(ncomp), [&](std::ptrdiff_t i) {
                const std::size_t c = static_cast<std::size_t>(i);
                cand.data[c] = inc.data[c] - lr * (m[c] / bc1) / denom;
            });
            DisplacementField3 cand_total = add_fields(accumulated, cand);
            cand_loss = evaluate_loss(fixed, moving, cand_total, cfg, flags, nullptr);
            if (std::isnan(cand_loss.l)) throw NumericError("register: NaN loss during optimization");
            if (cand_loss.l <= cur.l) {
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) {
            out.iterations = it - 1;
            return out;
        }

        const double delta = cur.l - cand_loss.l;
        inc = std::move(cand);
        cur = cand_loss;
        out.final_loss = cur;
        out.accepted_losses.push_back(cur.l);
        out.iterations = it;
        if (delta <= cfg.convergence_tol * std::max(std::fabs(cur.l), 1e-12)) return out;

        if (it < stage.iterations) {
            total = add_fields(accumulated, inc);
            cur = evaluate_loss(fixed, moving, total, cfg, flags, &grad);
            out.final_loss = cur;
        }
    }
    return out;
}

double fold_fraction_of(const DisplacementField3& field) {
    const TensorField3 f = deformation_gradient(field);
    const Volume3 j = jacobian_det(f);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(j.data.size());
    const double folds = deterministic_sum(
        n, [&](std::ptrdiff_t i) { return j.data[static_cast<std::size_t>(i)] <= 0.0 ? 1.0 : 0.0; });
    return folds / static_cast<double>(n);
}

} // namespace

RegResult register_pair(const Volume3& fixed, const Volume3& moving, const RegConfig& cfg) {
    cfg.validate();
    if (!fixed.grid.same_as(moving.grid)) throw ValidationError("register: grid mismatch");
    fixed.grid.validate("register");

    RegResult result;
    if (cfg.stages.empty()) {
        result.field = DisplacementField3(fixed.grid);
        StageLoss loss;
        loss.l_sim = similarity_loss(fixed, moving, cfg.sim);
        loss.l = loss.l_sim;
        result.per_stage_losses.push_back(loss);
        result.fold_fraction = 0.0;
        return result;
    }

    const int coarsest = cfg.stages.front().scale_factor;
    for (int a = 0; a < 3; ++a) {
        if (fixed.grid.dims[a] / coarsest < 8)
            throw ValidationError("register: fewer than 8 voxels per axis at the coarsest scale");
    }

    EvalFlags flags;
    flags.nhe_weight = cfg.lambda;

    DisplacementField3 total;   // accumulated field at the previous stage's grid
    bool have_total = false;
    for (const RegStage& stage : cfg.stages) {
        const Volume3 fixed_s = downsample(fixed, stage.scale_factor);
        const Volume3 moving_s = downsample(moving, stage.scale_factor);
        DisplacementField3 accum = have_total ? upsample_field(total, fixed_s.grid)
                                              : DisplacementField3(fixed_s.grid);
        DisplacementField3 inc(fixed_s.grid);
        const StageOutcome outcome = optimize_stage(fixed_s, moving_s, accum, inc, stage, cfg, flags);
        total = add_fields(accum, inc);
        have_total = true;
        result.per_stage_losses.push_back(outcome.final_loss);
        result.iterations_used.push_back(outcome.iterations);
        result.loss_trace.push_back(outcome.accepted_losses);
    }

    result.field = std::move(total);
    result.fold_fraction = fold_fraction_of(result.field);
    return result;
}

double gradient_check(const RegConfig& cfg, int grid_size, int probes, double eps, LossTerm term) {
    if (grid_size < 3) throw ValidationError("gradient_check: grid too small");
    if (!(eps > 0.0)) throw ValidationError("gradient_check: eps must be positive");
    GridSpec g;
    g.dims = {grid_size, grid_size, grid_size};

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    // Smooth band-limited textures: a few dozen random cosines.
    const int n_waves = 24;
    std::vector<std::array<double, 4>> waves_f, waves_m;
    for (int w = 0; w < n_waves; ++w) {
        waves_f.push_back({rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                           rng.uniform(0.0, 6.283185307179586)});
        waves_m.push_back({rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                           rng.uniform(0.0, 6.283185307179586)});
    }
    Volume3 fixed(g), moving(g);
    for (int k = 0; k < grid_size; ++k)
        for (int j = 0; j < grid_size; ++j)
            for (int i = 0; i < grid_size; ++i) {
                double vf = 0.0, vm = 0.0;
                for (int w = 0; w < n_waves; ++w) {
                    vf += std::cos(waves_f[w][0] * i + waves_f[w][1] * j + waves_f[w][2] * k + waves_f[w][3]);
                    vm += std::cos(waves_m[w][0] * i + waves_m[w][1] * j + waves_m[w][2] * k + waves_m[w][3]);
                }
                fixed.at(i, j, k) = 100.0 + 12.0 * vf;
                moving.at(i, j, k) = 100.0 + 12.0 * vm + 0.35 * vf * vf;
            }

    // Small smooth random field, about half a voxel of displacement.
    DisplacementField3 inc(g);
    for (double& d : inc.data) d = rng.normal(0.0, 0.5);
    inc = gaussian_smooth_field(inc, 1.5);

    EvalFlags flags;
    switch (term) {
        case LossTerm::Similarity:
            flags.nhe = false;
            flags.nhe_weight = 0.0;
            break;
        case LossTerm::Energy:
            flags.sim = false;
            flags.nhe_weight = 1.0;
            break;
        case LossTerm::Total:
            flags.nhe_weight = cfg.lambda;
            break;
    }

    DisplacementField3 analytic;
    evaluate_loss(fixed, moving, inc, cfg, flags, &analytic);

    const std::size_t ncomp = inc.data.size();
    double max_rel = 0.0;
    for (int p = 0; p < probes; ++p) {
        std::size_t c = 0;
        for (int attempt = 0; attempt < 64; ++attempt) {
            c = static_cast<std::size_t>(rng.below(ncomp));
            if (!flags.sim) break;
            const std::size_t voxel = c / 3;
            const int axis = static_cast<int>(c % 3);
            const int i = static_cast<int>(voxel % static_cast<std::size_t>(g.dims[0]));
            const int j = static_cast<int>((voxel / static_cast<std::size_t>(g.dims[0])) %
                                           static_cast<std::size_t>(g.dims[1]));
            const int k = static_cast<int>(voxel / (static_cast<std::size_t>(g.dims[0]) * g.dims[1]));
            const double coord =
                g.to_voxel(g.position(i, j, k)[axis] + inc.data[c], axis);
            const double dist = std::fabs(coord - std::round(coord));
            if (dist > 1.5 * eps / g.spacing[axis]) break;  // FD interval stays inside one cell
        }
        DisplacementField3 probe = inc;
        probe.data[c] = inc.data[c] + eps;
        const double lp = evaluate_loss(fixed, moving, probe, cfg, flags, nullptr).l;
        probe.data[c] = inc.data[c] - eps;
        const double lm = evaluate_loss(fixed, moving, probe, cfg, flags, nullptr).l;
        const double fd = (lp - lm) / (2.0 * eps);
        const double a = analytic.data[c];
        const double mag = std::max(std::fabs(a), std::fabs(fd));
        if (mag < 1e-6) continue;  // both below threshold: relative comparison skipped
        max_rel = std::max(max_rel, std::fabs(a - fd) / mag);
    }
    return max_rel;
}

} // namespace cardiomech
