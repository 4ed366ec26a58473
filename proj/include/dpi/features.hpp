#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpi/linalg.hpp"
#include "dpi/preprocess.hpp"

namespace dpi {

inline constexpr int kFeatureCount = 19;
inline constexpr int kContinuousFeatureCount = 13;  // the 6 event flags are not scaled
inline constexpr int kDefaultSeqLen = 60;

// Fixed feature order; column layout of every persisted sequence.
const std::array<std::string, kFeatureCount>& feature_names();

// Event tags carried as play-level binary flags, in feature order 13..18.
const std::array<std::string, 6>& flag_event_names();

struct MissingBallError : std::runtime_error {
    MissingBallError() : std::runtime_error("no ball record at the end-of-play frame") {}
};
struct EmptySideError : std::runtime_error {
    EmptySideError() : std::runtime_error("a side has no players at the end-of-play frame") {}
};
struct EmptySequenceError : std::runtime_error {
    EmptySequenceError() : std::runtime_error("every frame dropped during assembly") {}
};
struct NoDpiPlaysError : std::runtime_error {
    NoDpiPlaysError() : std::runtime_error("no DPI plays to compute the proximity threshold") {}
};
struct ClassTooSmallError : std::runtime_error {
    ClassTooSmallError() : std::runtime_error("a class has fewer than 3 members") {}
};
struct ZeroCountError : std::runtime_error {
    ZeroCountError() : std::runtime_error("class count must be positive") {}
};

struct FeatureVector {
    std::array<double, kFeatureCount> v{};
};

struct PlaySequence {
    long game_id = 0;
    long play_id = 0;
    long attacker_id = 0;
    long defender_id = 0;
    bool label = false;
    std::vector<FeatureVector> steps;
    double max_duel_distance = 0.0;
    long dropped_frames = 0;
};

struct DuelPair {
    long attacker_id = 0;
    long defender_id = 0;
};

struct ClassWeightSpec {
    long n_inst = 0;
    int n_classes = 0;
    std::vector<long> n_inst_class;
    std::vector<double> w_class;
};

double euclidean(double px, double py, double qx, double qy);

// Mirrors left-moving plays so every attack leads right:
// x' = 120 - x, y' = 53.34 - y, angles rotate by 180 degrees.
void normalize_direction(PlayFrames& play);

// Closest possession-side player and closest opponent to the ball at the
// end-of-play frame. Ties break toward the smaller nfl_id.
DuelPair select_duel(const PlayFrames& play, size_t end_event_index);

// One 19-dim step per frame where attacker, defender and ball are all
// present (players also need orientation/direction). The six event flags
// are 1 iff the tag occurs anywhere in the play, repeated at every step.
PlaySequence assemble_sequence(const PlayFrames& play, const DuelPair& duel, bool label);

// 0.90 empirical quantile (linear interpolation) of max_duel_distance
// over DPI sequences only.
double compute_proximity_threshold(const std::vector<PlaySequence>& sequences,
                                   double quantile = 0.90);

std::vector<PlaySequence> filter_by_proximity(const std::vector<PlaySequence>& sequences,
                                              double threshold);

struct SplitResult {
    std::vector<PlaySequence> train;
    std::vector<PlaySequence> validation;
    std::vector<PlaySequence> test;
};

// Stratified split: each class is shuffled with the seeded generator and
// cut at the fractions (train count rounded half-up, then validation,
// remainder to test).
SplitResult split_dataset(const std::vector<PlaySequence>& sequences,
                          std::array<double, 3> fractions, uint64_t seed);

// w[c] = n_inst / (n_classes * n_inst_class[c])
ClassWeightSpec class_weights(const std::vector<long>& counts);

struct Scaler {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
};

// Per-feature z-score statistics over all steps of the training
// sequences; flag columns stay at identity (mean 0, std 1).
Scaler fit_scaler(const std::vector<PlaySequence>& train);

// (x - mean) / std per continuous feature; features with std < 1e-8 map
// to 0.
void apply_scaler(const Scaler& scaler, PlaySequence& seq);

struct PaddedSequence {
    Mat x;                       // seq_len rows, kFeatureCount cols
    std::vector<uint8_t> mask;   // 1 on real steps
};

// Sequences longer than seq_len keep the last seq_len steps; shorter ones
// are left-padded with zero rows.
PaddedSequence pad_or_truncate(const PlaySequence& seq, int seq_len = kDefaultSeqLen);

}
