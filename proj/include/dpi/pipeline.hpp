#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "dpi/dataset.hpp"
#include "dpi/ingest.hpp"
#include "dpi/preprocess.hpp"

namespace dpi {

struct BuildOptions {
    std::optional<double> threshold_override;  // yards; computed from the data when absent
    uint64_t seed = 42;
    std::array<double, 3> fractions{0.56, 0.14, 0.30};
    int seq_len = kDefaultSeqLen;
    double quantile = 0.90;
    std::optional<std::array<double, 2>> weights_override;
};

struct BuildReport {
    PreprocessReport preprocess;
    long sequences_assembled = 0;
    long plays_dropped_assembly = 0;
    long sequences_after_proximity = 0;
    long positives_after_proximity = 0;
    long negatives_after_proximity = 0;
    double proximity_threshold = 0.0;
    bool threshold_overridden = false;

    std::string to_json() const;
};

// Preprocess chain, direction normalization, duel selection, sequence
// assembly, proximity filter, stratified split, class weights from the
// training counts, scaler fit on train only, padding to seq_len.
BuiltDataset build_dataset(const RawDataset& raw, const BuildOptions& opt, BuildReport& report);

}
