#pragma once

#include <utility>
#include <vector>

#include "cardiomech/propagation_types.hpp"
#include "cardiomech/registration.hpp"

namespace cardiomech {

// 2|A n B| / (|A| + |B|); 1 when both sets are empty.
double dice(const LabelMap3& a, const LabelMap3& b, int label);

// The three anatomical structures Dice evaluation reports on. The myocardium
// merges the feature regions 1, 2 and 4 of the six-label map.
enum class Structure { LvCavity, RvCavity, Myocardium };
double dice_structure(const LabelMap3& a, const LabelMap3& b, Structure structure);

// Registers dst (fixed) against src (moving) and warps src's labels by the
// resulting field. src must carry labels: the ED/ES phase labels from the
// sequence, or explicitly provided ones for previously propagated frames.
std::pair<LabelMap3, DisplacementField3> propagate(const CineSequence& seq, int src_frame, int dst_frame,
                                                   const RegConfig& cfg,
                                                   const LabelMap3* src_labels = nullptr);

struct FusionCandidate {
    Volume3 warped_frame;   // intensity frame warped onto the target grid
    LabelMap3 warped_labels;
};

// Local weighted voting: each candidate votes with its squared local NCC
// against the target; ties break toward the smaller label value.
LabelMap3 lwv_fuse(const Volume3& target, const std::vector<FusionCandidate>& candidates, int window);

// Propagates the source phase's labels to frames within n_adjacent-1 of it,
// then each labelled frame onto the target phase, and fuses the candidates.
// n_adjacent = 1 degenerates to direct propagation.
LabelMap3 multi_frame_segment(const CineSequence& seq, CardiacPhase target, int n_adjacent,
                              const RegConfig& cfg, int lwv_window = 5);

} // namespace cardiomech
