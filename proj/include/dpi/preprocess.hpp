#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpi/ingest.hpp"
#include "dpi/records.hpp"

namespace dpi {

inline constexpr const char* kPassForwardEvent = "pass_forward";
inline constexpr int kDedupStepMs = 10;
inline constexpr size_t kMaxEntitiesPerFrame = 23;

struct DedupOverflowError : std::runtime_error {
    DedupOverflowError() : std::runtime_error("timestamp dedup would cross the next native stamp") {}
};

struct NoEndEventError : std::runtime_error {
    NoEndEventError() : std::runtime_error("no event after pass_forward") {}
};

struct PlayFormatError : std::runtime_error {
    explicit PlayFormatError(const std::string& why) : std::runtime_error(why) {}
};

struct Frame {
    int64_t timestamp_ms = 0;
    int frame_id = 0;
    std::optional<std::string> event;  // "None" kept verbatim
    std::vector<TrackingRecord> entities;
};

// True when the frame carries a real event tag (present and not "None").
bool frame_has_event(const Frame& f);

struct PlayFrames {
    long game_id = 0;
    long play_id = 0;
    Side possession_side = Side::home;
    bool label = false;
    std::vector<Frame> frames;
    std::optional<size_t> pass_forward_index;
    std::optional<size_t> end_event_index;
    std::optional<std::string> end_event_name;
};

struct DedupStats {
    int groups_rewritten = 0;
};

// Groups a play's records into frames keyed by (timestamp, frame_id).
// Records arrive sorted; their within-frame order is preserved.
PlayFrames group_play(const RawPlay& play);

// Re-stamps frames that share a timestamp to t, t+10ms, t+20ms, ... in
// frame_id order. Throws DedupOverflowError if a re-stamp would reach the
// next native timestamp. Idempotent.
DedupStats dedup_timestamps(PlayFrames& play);

// Keeps plays containing a pass_forward event, setting pass_forward_index
// to the first occurrence. multi_tag_plays counts plays with more than one.
std::vector<PlayFrames> filter_forward_pass_plays(std::vector<PlayFrames> plays,
                                                  long* multi_tag_plays = nullptr);

// Drops frames before pass_forward_index; the pass frame becomes index 0.
void trim_to_pass_window(PlayFrames& play);

// First frame after index 0 with a real event tag. Throws NoEndEventError.
void find_end_event(PlayFrames& play);

struct PreprocessReport {
    long plays_in = 0;
    long plays_without_pass_forward = 0;
    long plays_without_end_event = 0;
    long duplicate_timestamp_groups = 0;
    long plays_multiple_pass_forward = 0;
    long plays_dedup_overflow = 0;
    long plays_malformed = 0;

    std::string to_json() const;
};

// Full chain: group, dedup, pass filter, trim, end event. Plays failing a
// stage are excluded and counted.
std::vector<PlayFrames> run_preprocess(const RawDataset& ds, PreprocessReport& report);

}
