#pragma once

#include <vector>

#include "fcp/synthetic.hpp"

namespace fcp {

enum class Phase { Base, Novel };

/// One labeled image: both feature families plus the binary class mask.
struct Shot {
    FeatureMap sam;
    FeatureMap backbone;
    Mask mask;
};

struct Episode {
    std::vector<Shot> support;  // K >= 1
    Shot query;
    int class_id = -1;
    Phase phase = Phase::Base;
};

/// Draw a class from the phase's split, then K support scenes and one query
/// scene all containing it. Distractor shapes come from the same split.
Episode sample_episode(const DatasetSpec& dataset, Phase phase, int shots, Rng& rng);

}  // namespace fcp
