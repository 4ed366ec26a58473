#include "dpi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dpi/csv.hpp"
#include "dpi/preprocess.hpp"
#include "dpi/rng.hpp"
#include "dpi/timeparse.hpp"

namespace fs = std::filesystem;

namespace dpi {

namespace {

constexpr long kPlaysPerGame = 40;
constexpr int kGamesPerWeek = 8;
constexpr double kPi = 3.14159265358979323846;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double wrap360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0) w += 360.0;
    return w;
}

struct Point {
    double x = 0.0;
    double y = 0.0;
};

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

double norm(Point p) { return std::sqrt(p.x * p.x + p.y * p.y); }

double heading_deg(Point v) { return wrap360(std::atan2(v.y, v.x) * 180.0 / kPi); }

Point clamp_to_field(Point p) {
    return {std::clamp(p.x, 0.5, kFieldLengthYd - 0.5), std::clamp(p.y, 0.5, kFieldWidthYd - 0.5)};
}

// One entity's path plus derived kinematics.
struct Track {
    std::optional<long> nfl_id;
    Side side = Side::ball;
    std::vector<Point> pos;
};

struct PlayPlan {
    long game_id = 0;
    long play_id = 0;
    bool dpi = false;
    PlayDirection direction = PlayDirection::right;
    int64_t start_ms = 0;
    int total_frames = 0;
    std::map<int, std::string> events;  // frame index -> tag
    std::vector<Track> tracks;
};

// Claims the first free frame at or after `at`.
void put_event(PlayPlan& plan, int at, const std::string& tag) {
    while (plan.events.count(at)) ++at;
    plan.events[at] = tag;
}

PlayPlan build_play(Rng& rng, long game_id, long play_id, bool dpi, bool leftward,
                    int players_per_side, int64_t start_ms, long home_base_id,
                    long away_base_id, bool home_attacks) {
    PlayPlan plan;
    plan.game_id = game_id;
    plan.play_id = play_id;
    plan.dpi = dpi;
    plan.direction = leftward ? PlayDirection::left : PlayDirection::right;
    plan.start_ms = start_ms;

    const int n_pre = 4 + static_cast<int>(rng.below(4));
    const int n_drop = 5 + static_cast<int>(rng.below(5));
    const int n_fly = 6 + static_cast<int>(rng.below(5));
    const int k_pass = n_pre + n_drop;
    const int k_arrive = k_pass + n_fly;
    plan.total_frames = k_arrive + 7;

    // How close the defender gets when the ball arrives is the heart of the
    // generator. A small core of fouls is blatant - the defender all but
    // occupies the catch point. The rest arrive at arm's length, close
    // enough to reach and disrupt; referees flag most of those but miss a
    // fair number, so the arm's-length range carries both labels and no
    // model can be perfect on it. A defender who instead beats the receiver
    // to the spot is in legal position however tight the coverage ends up,
    // so a sliver of clean plays finishes nearly glued. Clean coverage
    // otherwise keeps a healthy cushion.
    bool core = false;
    bool tight = false;
    bool uncalled = false;
    double gap_arrive;
    if (dpi && (core = rng.uniform() < 0.15))
        gap_arrive = rng.uniform(0.10, 0.30);
    else if (dpi)
        gap_arrive = rng.uniform(0.62, 1.02);
    else if ((tight = rng.uniform() < 0.015))
        gap_arrive = rng.uniform(0.05, 0.40);
    else if ((uncalled = rng.uniform() < 0.057))
        gap_arrive = rng.uniform(0.62, 1.02);
    else
        gap_arrive = rng.uniform(1.6, 4.4);

    put_event(plan, n_pre, "ball_snap");
    put_event(plan, k_pass, kPassForwardEvent);
    // Event tags come and go like they do in real tracking feeds; which tag
    // ends up closing the window varies play to play.
    if (rng.uniform() < 0.85) put_event(plan, k_arrive, "pass_arrived");
    const bool caught = rng.uniform() < 0.5;
    if (rng.uniform() < 0.9)
        put_event(plan, k_arrive + 1, caught ? "pass_outcome_caught" : "pass_outcome_incomplete");
    const double contact_p = core ? 0.9 : (dpi || tight || uncalled) ? 0.6 : 0.08;
    if (rng.bernoulli(contact_p)) put_event(plan, k_arrive + 2, "first_contact");
    if (caught && rng.uniform() < 0.8)
        put_event(plan, k_arrive + 3 + static_cast<int>(rng.below(2)), "tackle");
    else if (!caught && rng.uniform() < 0.15)
        put_event(plan, k_arrive + 3, "out_of_bounds");
    // every play must close its window; when every optional tag missed,
    // the whistle still blows
    if (plan.events.rbegin()->first <= k_pass) put_event(plan, k_arrive + 3, "tackle");

    const double x_los = rng.uniform(25.0, 80.0);
    const double y_mid = kFieldWidthYd / 2.0;
    const int t_len = plan.total_frames;

    // receiver route: downfield at a slight angle from the snap on
    const double v_rec = rng.uniform(6.5, 8.5) * 0.1;  // yards per frame
    const double route_deg = rng.uniform(-10.0, 10.0) * kPi / 180.0;
    const Point route_dir{std::cos(route_deg), std::sin(route_deg)};
    const Point rec0{x_los + rng.uniform(-1.0, 0.0), rng.uniform(10.0, 43.0)};

    Track receiver;
    receiver.side = home_attacks ? Side::home : Side::away;
    receiver.nfl_id = (home_attacks ? home_base_id : away_base_id) + 1;
    receiver.pos.resize(static_cast<size_t>(t_len));
    for (int k = 0; k < t_len; ++k) {
        double run = 0.0;
        if (k > n_pre) run = v_rec * (k - n_pre);
        double slow = 0.0;
        if (k > k_arrive + 1) {
            run = v_rec * (k_arrive + 1 - n_pre);
            slow = 0.3 * v_rec * (k - k_arrive - 1);
        }
        Point p = rec0 + (run + slow) * route_dir;
        p.x += rng.uniform(-0.05, 0.05);
        p.y += rng.uniform(-0.05, 0.05);
        receiver.pos[static_cast<size_t>(k)] = clamp_to_field(p);
    }

    // defender: trails at a cushion through the flight, closes to the
    // arrival gap over the last few frames, holds it for a beat, then
    // everybody converges on the catch point - the tackle rally after a
    // catch, the usual pile-up and deceleration otherwise - so the tail of
    // every play looks alike and only the instant of arrival tells plays
    // apart. Mid-flight "decoy" pinches on some plays keep momentary
    // closeness from meaning anything by itself.
    const double gap0 = rng.uniform(2.0, 4.5);
    const double gap_end = rng.uniform(0.55, 1.15);
    const bool has_decoy = rng.uniform() < 0.22;
    int k_decoy = -10;
    double decoy_gap = 0.0;
    if (has_decoy) {
        k_decoy = k_pass + 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n_fly - 5)));
        decoy_gap = rng.uniform(1.6, 2.4);
    }
    double phi = rng.uniform(0.0, 2.0 * kPi);

    Track defender;
    defender.side = home_attacks ? Side::away : Side::home;
    defender.nfl_id = (home_attacks ? away_base_id : home_base_id) + 1;
    defender.pos.resize(static_cast<size_t>(t_len));
    for (int k = 0; k < t_len; ++k) {
        double gap;
        if (k < k_arrive - 3) {
            gap = gap0;
        } else if (k <= k_arrive) {
            const double f = static_cast<double>(k - (k_arrive - 3)) / 3.0;
            gap = gap0 + f * (gap_arrive - gap0);
        } else if (k <= k_arrive + 1) {
            gap = gap_arrive;
        } else {
            const double f = std::min(1.0, static_cast<double>(k - (k_arrive + 1)) / 3.0);
            gap = gap_arrive + f * (gap_end - gap_arrive);
        }
        if (k == k_decoy)
            gap = decoy_gap;
        else if (k == k_decoy - 1 || k == k_decoy + 1)
            gap = 0.5 * (gap + decoy_gap);
        gap += rng.uniform(-0.10, 0.10);
        if (gap < 0.05) gap = 0.05;
        phi += rng.uniform(-0.14, 0.14);
        const Point offset{gap * std::cos(phi), gap * std::sin(phi)};
        defender.pos[static_cast<size_t>(k)] =
            clamp_to_field(receiver.pos[static_cast<size_t>(k)] + offset);
    }

    // quarterback: drops back after the snap, then holds
    Track qb;
    qb.side = receiver.side;
    qb.nfl_id = *receiver.nfl_id + 1;
    qb.pos.resize(static_cast<size_t>(t_len));
    const Point qb0{x_los - 4.0, y_mid + rng.uniform(-1.0, 1.0)};
    for (int k = 0; k < t_len; ++k) {
        double back = 0.0;
        if (k > n_pre) back = 0.5 * std::min(k - n_pre, 4);
        Point p{qb0.x - back + rng.uniform(-0.04, 0.04), qb0.y + rng.uniform(-0.04, 0.04)};
        qb.pos[static_cast<size_t>(k)] = clamp_to_field(p);
    }

    // ball: with the quarterback until the pass, then a straight flight to
    // the receiver's arrival spot; afterwards carried or dead on the spot
    Track ball;
    ball.side = Side::ball;
    ball.pos.resize(static_cast<size_t>(t_len));
    const Point throw_from = qb.pos[static_cast<size_t>(k_pass)];
    const Point arrive_at = receiver.pos[static_cast<size_t>(k_arrive)];
    for (int k = 0; k < t_len; ++k) {
        Point p;
        if (k <= k_pass) {
            p = qb.pos[static_cast<size_t>(k)] + Point{0.2, 0.0};
        } else if (k <= k_arrive) {
            const double f = static_cast<double>(k - k_pass) / (k_arrive - k_pass);
            p = throw_from + f * (arrive_at - throw_from);
        } else if (caught) {
            p = receiver.pos[static_cast<size_t>(k)];
        } else {
            p = arrive_at;
        }
        ball.pos[static_cast<size_t>(k)] = clamp_to_field(p);
    }

    plan.tracks.push_back(std::move(receiver));
    plan.tracks.push_back(std::move(defender));
    plan.tracks.push_back(std::move(qb));

    // Remaining players hold formation near the line of scrimmage. They
    // drift along y only, so nobody but the tracked defender can get near
    // the ball's arrival spot and steal the duel.
    auto fill_side = [&](Side side, long base_id, int already, double x_off) {
        for (int i = already; i < players_per_side; ++i) {
            Track t;
            t.side = side;
            t.nfl_id = base_id + 1 + i;
            t.pos.resize(static_cast<size_t>(t_len));
            Point p{x_los + x_off + rng.uniform(-1.5, 1.5), rng.uniform(14.0, 40.0)};
            const Point drift{0.0, rng.uniform(-0.08, 0.08)};
            for (int k = 0; k < t_len; ++k) {
                if (k > n_pre) p = p + drift;
                Point q{p.x + rng.uniform(-0.04, 0.04), p.y + rng.uniform(-0.04, 0.04)};
                t.pos[static_cast<size_t>(k)] = clamp_to_field(q);
            }
            plan.tracks.push_back(std::move(t));
        }
    };
    const Side att_side = home_attacks ? Side::home : Side::away;
    const Side def_side = home_attacks ? Side::away : Side::home;
    fill_side(att_side, home_attacks ? home_base_id : away_base_id, 2, -1.0);
    fill_side(def_side, home_attacks ? away_base_id : home_base_id, 1, 1.5);

    plan.tracks.push_back(std::move(ball));
    return plan;
}

void emit_play(const PlayPlan& plan, std::ostream& out, int frame_rate_hz) {
    const int step_ms = 1000 / frame_rate_hz;
    const bool mirror = plan.direction == PlayDirection::left;

    for (const Track& track : plan.tracks) {
        double prev_speed = 0.0;
        for (int k = 0; k < plan.total_frames; ++k) {
            const Point cur = track.pos[static_cast<size_t>(k)];
            const Point prev = track.pos[static_cast<size_t>(std::max(0, k - 1))];
            const Point delta = cur - prev;
            const double speed = k == 0 ? 0.0 : norm(delta) * frame_rate_hz;
            const double accel = k == 0 ? 0.0 : std::abs(speed - prev_speed) * frame_rate_hz;

            TrackingRecord rec;
            rec.game_id = plan.game_id;
            rec.play_id = plan.play_id;
            rec.frame_id = k + 1;
            rec.timestamp_ms = plan.start_ms + static_cast<int64_t>(k) * step_ms;
            rec.nfl_id = track.nfl_id;
            rec.side = track.side;
            rec.play_direction = plan.direction;
            rec.team_raw = track.side == Side::ball ? "football"
                                                    : (track.side == Side::home ? "home" : "away");

            Point p = cur;
            double dir = k == 0 ? heading_deg(Point{1.0, 0.0}) : heading_deg(delta);
            if (mirror) {
                p = Point{kFieldLengthYd - p.x, kFieldWidthYd - p.y};
                dir = wrap360(dir + 180.0);
            }
            rec.x = round2(p.x);
            rec.y = round2(p.y);
            rec.speed = round2(speed);
            rec.accel = round2(accel);
            if (track.side != Side::ball) {
                rec.orientation_deg = round2(dir);
                rec.direction_deg = round2(dir);
            }
            auto it = plan.events.find(k);
            rec.event = it != plan.events.end() ? it->second : "None";

            write_csv_row(out, serialize_tracking_record(rec));
            prev_speed = speed;
        }
    }
}

std::string team_code(int i) {
    std::string code = "AA";
    code[0] = static_cast<char>('A' + i / 26);
    code[1] = static_cast<char>('A' + i % 26);
    return code;
}

}  // namespace

SynthSummary generate_season(const SynthConfig& config, const std::string& out_dir) {
    if (config.n_plays <= 0) throw std::invalid_argument("n_plays must be positive");
    if (config.dpi_rate <= 0.0 || config.dpi_rate >= 1.0)
        throw std::invalid_argument("dpi_rate must lie in (0, 1)");
    if (config.players_per_side < 2 || config.players_per_side > 11)
        throw std::invalid_argument("players_per_side must lie in [2, 11]");
    if (config.frame_rate_hz <= 0 || 1000 % config.frame_rate_hz != 0)
        throw std::invalid_argument("frame_rate_hz must divide 1000");

    fs::create_directories(out_dir);
    const fs::path base(out_dir);

    SynthSummary summary;
    summary.n_plays = config.n_plays;
    summary.n_games = (config.n_plays + kPlaysPerGame - 1) / kPlaysPerGame;
    summary.n_weeks = static_cast<int>((summary.n_games + kGamesPerWeek - 1) / kGamesPerWeek);
    summary.n_dpi = std::llround(static_cast<double>(config.n_plays) * config.dpi_rate);

    Rng rng(config.seed);

    // exact DPI count: shuffle play slots, mark the first n_dpi
    std::vector<long> slots(static_cast<size_t>(config.n_plays));
    for (long i = 0; i < config.n_plays; ++i) slots[static_cast<size_t>(i)] = i;
    rng.shuffle(slots);
    std::vector<uint8_t> is_dpi(static_cast<size_t>(config.n_plays), 0);
    for (long i = 0; i < summary.n_dpi; ++i) is_dpi[static_cast<size_t>(slots[static_cast<size_t>(i)])] = 1;

    const int64_t season_start = parse_iso8601_ms("2021-09-05T13:00:00.000Z");

    std::ofstream games_out(base / "games.csv", std::ios::binary);
    write_csv_row(games_out, {"gameId", "homeTeamAbbr", "visitorTeamAbbr", "week"});
    std::ofstream plays_out(base / "plays.csv", std::ios::binary);
    write_csv_row(plays_out, {"gameId", "playId", "possessionTeam", "isDefensivePI", "penaltyCodes"});

    std::vector<std::ofstream> week_files;
    for (int w = 1; w <= summary.n_weeks; ++w) {
        const std::string name = "week" + std::to_string(w) + ".csv";
        week_files.emplace_back(base / name, std::ios::binary);
        write_csv_row(week_files.back(), tracking_columns());
        summary.files.push_back((base / name).string());
    }
    summary.files.push_back((base / "games.csv").string());
    summary.files.push_back((base / "plays.csv").string());

    long play_index = 0;
    for (long g = 0; g < summary.n_games; ++g) {
        const long game_id = 2021090000L + g;
        const int week = static_cast<int>(g / kGamesPerWeek) + 1;
        const std::string home = team_code(static_cast<int>((2 * g) % 520));
        const std::string away = team_code(static_cast<int>((2 * g + 1) % 520));
        write_csv_row(games_out, {std::to_string(game_id), home, away, std::to_string(week)});

        std::ofstream& week_out = week_files[static_cast<size_t>(week - 1)];
        const int64_t game_start = season_start + g * 4 * 3600 * 1000LL;
        const long home_base_id = 100000 + g * 100;
        const long away_base_id = 200000 + g * 100;

        for (long p = 0; p < kPlaysPerGame && play_index < config.n_plays; ++p, ++play_index) {
            const long play_id = 100 + 5 * p;
            const bool dpi = is_dpi[static_cast<size_t>(play_index)] != 0;
            const bool leftward = (g + p) % 2 == 1;
            const bool home_attacks = p % 2 == 0;

            write_csv_row(plays_out,
                          {std::to_string(game_id), std::to_string(play_id),
                           home_attacks ? home : away, dpi ? "true" : "false",
                           dpi ? "DPI" : ""});

            PlayPlan plan = build_play(rng, game_id, play_id, dpi, leftward,
                                       config.players_per_side,
                                       game_start + p * 60 * 1000LL, home_base_id, away_base_id,
                                       home_attacks);
            emit_play(plan, week_out, config.frame_rate_hz);
        }
    }
    return summary;
}

std::map<std::string, std::vector<PlayKey>> inject_pathologies(
    RawDataset& ds, const std::vector<std::string>& kinds) {
    for (const auto& k : kinds)
        if (std::find(pathology_kinds().begin(), pathology_kinds().end(), k) ==
            pathology_kinds().end())
            throw std::invalid_argument("unknown pathology kind '" + k + "'");

    std::map<std::string, std::vector<PlayKey>> applied;
    if (kinds.empty()) return applied;
    const size_t cycle = 2 * kinds.size();

    for (size_t i = 0; i < ds.plays.size(); ++i) {
        const size_t slot = i % cycle;
        if (slot >= kinds.size()) continue;
        const std::string& kind = kinds[slot];
        RawPlay& play = ds.plays[i];

        if (kind == "duplicate_timestamps") {
            std::vector<int64_t> stamps;
            for (const auto& r : play.records)
                if (stamps.empty() || stamps.back() != r.timestamp_ms)
                    stamps.push_back(r.timestamp_ms);
            if (stamps.size() < 4) continue;
            for (auto& r : play.records)
                if (r.timestamp_ms == stamps[1] || r.timestamp_ms == stamps[2])
                    r.timestamp_ms = stamps[0];
        } else if (kind == "missing_ball_frames") {
            auto& recs = play.records;
            recs.erase(std::remove_if(recs.begin(), recs.end(),
                                      [](const TrackingRecord& r) { return r.is_ball(); }),
                       recs.end());
        } else if (kind == "no_end_event") {
            int64_t pass_ms = -1;
            for (const auto& r : play.records)
                if (r.event && *r.event == kPassForwardEvent) {
                    pass_ms = r.timestamp_ms;
                    break;
                }
            if (pass_ms < 0) continue;
            for (auto& r : play.records)
                if (r.timestamp_ms > pass_ms) r.event.reset();
        } else {  // multiple_pass_forward
            int64_t pass_ms = -1;
            for (const auto& r : play.records)
                if (r.event && *r.event == kPassForwardEvent) {
                    pass_ms = r.timestamp_ms;
                    break;
                }
            if (pass_ms < 0) continue;
            // first fully quiet frame after the pass gets a second tag
            int64_t target = -1;
            std::map<int64_t, bool> quiet;
            for (const auto& r : play.records) {
                if (r.timestamp_ms <= pass_ms) continue;
                bool real = r.event && *r.event != "None";
                auto [it, inserted] = quiet.emplace(r.timestamp_ms, !real);
                if (!inserted && real) it->second = false;
            }
            for (const auto& [ms, is_quiet] : quiet)
                if (is_quiet) {
                    target = ms;
                    break;
                }
            if (target < 0) continue;
            for (auto& r : play.records)
                if (r.timestamp_ms == target) r.event = kPassForwardEvent;
        }
        applied[kind].push_back(play.key);
    }
    return applied;
}

}
