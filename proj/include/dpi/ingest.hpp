#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpi/records.hpp"

namespace dpi {

struct MissingFileError : std::runtime_error {
    explicit MissingFileError(const std::string& path)
        : std::runtime_error("missing file: " + path) {}
};

struct MissingColumnError : std::runtime_error {
    explicit MissingColumnError(const std::string& name)
        : std::runtime_error("missing column: " + name), column(name) {}
    std::string column;
};

struct RowError {
    std::string file;
    size_t line_no = 0;
    std::string reason;
};

struct ParseResult {
    std::vector<TrackingRecord> records;
    std::vector<RowError> errors;
    long clamped_coordinates = 0;
};

struct JoinFailure {
    long game_id = 0;
    long play_id = 0;
    long rows = 0;
    std::string reason;
};

struct LoadReport {
    long rows_read = 0;        // data rows seen across all tracking files
    long rows_malformed = 0;   // failed field-level parsing
    long rows_parsed = 0;      // became TrackingRecords
    long rows_skipped = 0;     // parsed but dropped (join failure, duplicate frame)
    long rows_joined = 0;      // attached to a loaded play
    long plays_loaded = 0;
    long clamped_coordinates = 0;
    std::vector<RowError> row_errors;
    std::vector<JoinFailure> join_failures;
    std::vector<PlayKey> plays_without_tracking;

    std::string to_json() const;
};

struct RawPlay {
    PlayKey key;
    PlayMeta meta;
    Side possession_side = Side::home;
    std::vector<TrackingRecord> records;  // sorted by (timestamp_ms, frame_id)
};

struct RawDataset {
    std::vector<RawPlay> plays;  // sorted by key
    std::map<PlayKey, PlayMeta> play_meta;
    std::map<long, GameMeta> game_meta;
    LoadReport report;
};

// "SEA " / "sea" -> "SEA"
std::string normalize_team_code(const std::string& raw);

ParseResult parse_tracking_file(std::istream& in, const std::string& file_label);
std::vector<PlayMeta> parse_plays_file(std::istream& in);
std::vector<GameMeta> parse_games_file(std::istream& in);

// True iff the play is a DPI: prefer the boolean flag, fall back to
// scanning penalty codes (split on ';' and ',') for the "DPI" token.
bool resolve_label(const PlayMeta& meta);

// Reads games.csv, plays.csv and week*.csv from data_dir. Weekly files
// are parsed concurrently; the merge is an ordered reduction so the
// result is independent of scheduling.
RawDataset load_dataset(const std::string& data_dir);

// Value-preserving inverse of parse_tracking_file for one record, in the
// canonical tracking column order.
std::vector<std::string> serialize_tracking_record(const TrackingRecord& rec);
const std::vector<std::string>& tracking_columns();

}
