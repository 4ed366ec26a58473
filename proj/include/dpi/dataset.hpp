#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dpi/features.hpp"
#include "dpi/linalg.hpp"

namespace dpi {

// A scaled, padded sequence ready for the network.
struct SequenceEx {
    long game_id = 0;
    long play_id = 0;
    bool label = false;
    Mat x;                      // seq_len x kFeatureCount
    std::vector<uint8_t> mask;  // 1 on real steps
};

struct BuiltDataset {
    std::vector<SequenceEx> train;
    std::vector<SequenceEx> validation;
    std::vector<SequenceEx> test;

    Scaler scaler;
    double proximity_threshold = 0.0;
    bool threshold_overridden = false;
    uint64_t seed = 0;
    int seq_len = kDefaultSeqLen;
    std::array<double, 3> fractions{0.56, 0.14, 0.30};

    ClassWeightSpec weights_computed;     // from the training class counts
    std::array<double, 2> weights_effective{1.0, 1.0};
};

inline long count_positive(const std::vector<SequenceEx>& v) {
    long n = 0;
    for (const auto& s : v) n += s.label ? 1 : 0;
    return n;
}

}
