#include "cardiomech/propagation.hpp"

#include <algorithm>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/similarity.hpp"
#include "cardiomech/threading.hpp"

namespace cardiomech {

double dice(const LabelMap3& a, const LabelMap3& b, int label) {
    if (!a.grid.same_as(b.grid)) throw ValidationError("dice: grid mismatch");
    std::size_t na = 0, nb = 0, overlap = 0;
    for (std::size_t v = 0; v < a.data.size(); ++v) {
        const bool in_a = a.data[v] == label, in_b = b.data[v] == label;
        na += in_a;
        nb += in_b;
        overlap += in_a && in_b;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

double dice_structure(const LabelMap3& a, const LabelMap3& b, Structure structure) {
    if (!a.grid.same_as(b.grid)) throw ValidationError("dice_structure: grid mismatch");
    auto member = [structure](std::uint8_t l) {
        switch (structure) {
            case Structure::LvCavity: return l == 3;
            case Structure::RvCavity: return l == 5;
            case Structure::Myocardium: return l == 1 || l == 2 || l == 4;
        }
        return false;
    };
    std::size_t na = 0, nb = 0, overlap = 0;
    for (std::size_t v = 0; v < a.data.size(); ++v) {
        const bool in_a = member(a.data[v]), in_b = member(b.data[v]);
        na += in_a;
        nb += in_b;
        overlap += in_a && in_b;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

std::pair<LabelMap3, DisplacementField3> propagate(const CineSequence& seq, int src_frame, int dst_frame,
                                                   const RegConfig& cfg, const LabelMap3* src_labels) {
    seq.validate();
    const int n = static_cast<int>(seq.frames.size());
    if (src_frame < 0 || src_frame >= n || dst_frame < 0 || dst_frame >= n)
        throw ValidationError("propagate: frame index out of range");

    const LabelMap3* labels = src_labels;
    if (!labels) {
        if (src_frame == seq.ed_index) labels = &seq.labels_ed;
        else if (src_frame == seq.es_index) labels = &seq.labels_es;
        else throw ValidationError("propagate: source frame " + std::to_string(src_frame) + " has no labels");
    }

    const RegResult reg = register_pair(seq.frames[static_cast<std::size_t>(dst_frame)],
                                        seq.frames[static_cast<std::size_t>(src_frame)], cfg);
    LabelMap3 warped = warp_labels(*labels, reg.field);
    return {std::move(warped), reg.field};
}

LabelMap3 lwv_fuse(const Volume3& target, const std::vector<FusionCandidate>& candidates, int window) {
    if (candidates.empty()) throw ValidationError("lwv_fuse: empty candidate list");
    if (candidates.size() > 64) throw ValidationError("lwv_fuse: more than 64 candidates");
    for (const FusionCandidate& c : candidates) {
        if (!c.warped_frame.grid.same_as(target.grid) || !c.warped_labels.grid.same_as(target.grid))
            throw ValidationError("lwv_fuse: grid mismatch");
    }

    std::vector<Volume3> weights;
    weights.reserve(candidates.size());
    for (const FusionCandidate& c : candidates)
        weights.push_back(lncc_map(target, c.warped_frame, window, 1e-5));

    LabelMap3 out(target.grid);
    const std::size_t nc = candidates.size();
    parallel_for(static_cast<std::ptrdiff_t>(target.grid.voxel_count()), [&](std::ptrdiff_t i) {
        const std::size_t v = static_cast<std::size_t>(i);
        // Accumulate per-label weight sums over the few candidates.
        std::uint8_t lab[64];
        double sum[64];
        std::size_t nlab = 0;
        for (std::size_t c = 0; c < nc; ++c) {
            const std::uint8_t l = candidates[c].warped_labels.data[v];
            const double w = weights[c].data[v];
            std::size_t slot = nlab;
            for (std::size_t s = 0; s < nlab; ++s) {
                if (lab[s] == l) {
                    slot = s;
                    break;
                }
            }
            if (slot == nlab) {
                lab[slot] = l;
                sum[slot] = 0.0;
                ++nlab;
            }
            sum[slot] += w;
        }
        std::uint8_t best = lab[0];
        double best_w = sum[0];
        for (std::size_t s = 1; s < nlab; ++s) {
            if (sum[s] > best_w || (sum[s] == best_w && lab[s] < best)) {
                best = lab[s];
                best_w = sum[s];
            }
        }
        out.data[v] = best;
    });
    return out;
}

LabelMap3 multi_frame_segment(const CineSequence& seq, CardiacPhase target, int n_adjacent,
                              const RegConfig& cfg, int lwv_window) {
    seq.validate();
    if (n_adjacent < 1) throw ValidationError("multi_frame_segment: n_adjacent must be >= 1");
    const int n = static_cast<int>(seq.frames.size());
    const int target_idx = target == CardiacPhase::ES ? seq.es_index : seq.ed_index;
    const int src_idx = target == CardiacPhase::ES ? seq.ed_index : seq.es_index;
    const LabelMap3& src_labels = target == CardiacPhase::ES ? seq.labels_ed : seq.labels_es;
    const Volume3& target_frame = seq.frames[static_cast<std::size_t>(target_idx)];

    std::vector<FusionCandidate> candidates;
    for (int off = -(n_adjacent - 1); off <= n_adjacent - 1; ++off) {
        const int nb = src_idx + off;
        if (nb < 0 || nb >= n) continue;  // out-of-range neighbours are skipped

        LabelMap3 nb_labels;
        const Volume3* nb_frame = nullptr;
        if (nb == src_idx) {
            nb_labels = src_labels;
            nb_frame = &seq.frames[static_cast<std::size_t>(src_idx)];
        } else {
            auto [labels, field] = propagate(seq, src_idx, nb, cfg, &src_labels);
            nb_labels = std::move(labels);
            nb_frame = &seq.frames[static_cast<std::size_t>(nb)];
        }

        FusionCandidate cand;
        if (nb == target_idx) {
            cand.warped_labels = std::move(nb_labels);
            cand.warped_frame = *nb_frame;
        } else {
            const RegResult reg = register_pair(target_frame, *nb_frame, cfg);
            cand.warped_labels = warp_labels(nb_labels, reg.field);
            cand.warped_frame = warp_volume(*nb_frame, reg.field);
        }
        candidates.push_back(std::move(cand));
    }
    if (candidates.empty()) throw ValidationError("multi_frame_segment: all neighbours out of range");
    return lwv_fuse(target_frame, candidates, lwv_window);
}

} // namespace cardiomech
