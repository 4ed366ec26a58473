#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace dpi {

enum class Side { home, away, ball };
enum class PlayDirection { left, right };

constexpr double kFieldLengthYd = 120.0;
constexpr double kFieldWidthYd = 53.34;

struct PlayKey {
    long game_id = 0;
    long play_id = 0;
    auto operator<=>(const PlayKey&) const = default;
};

// One tracked entity (player or ball) at one frame.
struct TrackingRecord {
    long game_id = 0;
    long play_id = 0;
    int frame_id = 0;
    int64_t timestamp_ms = 0;
    std::optional<long> nfl_id;  // absent for the ball
    Side side = Side::ball;
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;
    double accel = 0.0;
    std::optional<double> orientation_deg;  // absent for the ball
    std::optional<double> direction_deg;    // absent for the ball
    std::optional<std::string> event;       // raw tag; "None" means nothing happened
    PlayDirection play_direction = PlayDirection::right;
    std::string team_raw;  // source team token, kept for unresolved sides

    bool is_ball() const { return side == Side::ball; }
    PlayKey key() const { return {game_id, play_id}; }
};

struct PlayMeta {
    long game_id = 0;
    long play_id = 0;
    std::string possession_team;
    std::optional<bool> dpi_flag;
    std::optional<std::string> penalty_codes;
    bool is_dpi = false;  // resolved from dpi_flag / penalty_codes at load
};

struct GameMeta {
    long game_id = 0;
    std::string home_team;
    std::string visitor_team;
    int week = 1;
};

}
