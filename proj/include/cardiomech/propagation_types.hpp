#pragma once

#include <vector>

#include "cardiomech/volume.hpp"

namespace cardiomech {

enum class CardiacPhase { ED, ES };

// A cine acquisition: ordered frames on one grid with ground-truth labels at
// the ED and ES phases.
struct CineSequence {
    std::vector<Volume3> frames;
    int ed_index = 0;
    int es_index = 0;
    LabelMap3 labels_ed;
    LabelMap3 labels_es;

    void validate() const;
};

} // namespace cardiomech
