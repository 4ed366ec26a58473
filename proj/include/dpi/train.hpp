#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dpi/dataset.hpp"
#include "dpi/metrics.hpp"
#include "dpi/neural.hpp"

namespace dpi {

struct TrainOptions {
    int epochs = 100;
    int batch = 64;
    double lr = 1e-3;
    int patience = 15;
    double recall_floor = 0.8;
    std::array<double, 2> weights{1.0, 1.0};  // (negative, positive)
};

struct EpochStats {
    int epoch = 0;  // 0 is the pre-training evaluation
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_recall = 0.0;
    double val_precision = 0.0;
};

struct TrainRunRecord {
    ModelConfig config;
    uint64_t seed = 0;
    std::vector<EpochStats> history;
    Checkpoint checkpoint;  // best-epoch parameters, frozen threshold
    double frozen_threshold = 0.5;
    double val_precision = 0.0;
    double val_recall = 0.0;
    bool floor_met = false;
    int best_epoch = 0;
    bool failed = false;
    std::string failure;
};

struct ThresholdChoice {
    double threshold = 0.5;
    double precision = 0.0;
    double recall = 0.0;
    bool floor_met = false;
};

// Candidates are the distinct score values. Maximize precision subject to
// recall >= recall_floor, ties to the higher threshold; if nothing meets
// the floor, fall back to (recall, precision, threshold) lexicographic max.
ThresholdChoice select_threshold(const std::vector<uint8_t>& labels,
                                 const std::vector<double>& scores,
                                 double recall_floor = 0.8);

std::vector<double> score_split(const std::vector<SequenceEx>& split, const Parameters& p);
std::vector<uint8_t> labels_of(const std::vector<SequenceEx>& split);

// Mini-batch Adam training with per-example class-weighted loss, epoch
// shuffling from the run seed, and early stopping on the lexicographic
// validation objective (floor_met, precision, recall). A non-finite loss
// marks the record failed instead of throwing.
TrainRunRecord train_model(const BuiltDataset& ds, const ModelConfig& config,
                           const TrainOptions& opt);

struct GridEntry {
    Arch arch = Arch::lstm;
    int cells = 0;
    std::vector<TrainRunRecord> runs;
    int selected = -1;  // -1 when every run failed
};

struct GridResult {
    std::vector<GridEntry> entries;
};

// runs seeded base_seed + k, shared across configs.
GridResult run_experiment_grid(const BuiltDataset& ds, const std::vector<Arch>& archs,
                               const std::vector<int>& cells, int runs, uint64_t base_seed,
                               const TrainOptions& opt);

// checkpoint.json + history.csv under dir.
void write_run_outputs(const TrainRunRecord& rec, const std::string& dir);

// Test/validation metrics for a trained checkpoint.
SplitMetrics evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<SequenceEx>& split);

}
