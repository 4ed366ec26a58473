#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dpi/ingest.hpp"

namespace dpi {

struct SynthConfig {
    long n_plays = 500;
    double dpi_rate = 0.0146;
    uint64_t seed = 1;
    int players_per_side = 5;  // at most 11
    int frame_rate_hz = 10;
};

struct SynthSummary {
    long n_games = 0;
    long n_plays = 0;
    long n_dpi = 0;  // exactly llround(n_plays * dpi_rate)
    int n_weeks = 0;
    std::vector<std::string> files;
};

// Writes games.csv, plays.csv and week<k>.csv into out_dir. Every play
// carries a pass_forward tag and an end event; DPI plays converge to a
// small duel gap by ball arrival and usually carry first_contact, non-DPI
// plays keep a larger gap. Byte-identical output for equal configs.
SynthSummary generate_season(const SynthConfig& config, const std::string& out_dir);

inline const std::vector<std::string>& pathology_kinds() {
    static const std::vector<std::string> kinds = {
        "duplicate_timestamps", "missing_ball_frames", "no_end_event", "multiple_pass_forward"};
    return kinds;
}

// Deterministically corrupts a rotating subset of plays (at most one kind
// per play, roughly half the plays untouched). Returns the corrupted play
// keys per kind.
std::map<std::string, std::vector<PlayKey>> inject_pathologies(
    RawDataset& ds, const std::vector<std::string>& kinds);

}
