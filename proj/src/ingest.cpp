#include "dpi/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpi/csv.hpp"
#include "dpi/timeparse.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dpi {

namespace {

bool is_absent(const std::string& s) { return s.empty() || s == "NA"; }

bool parse_long(const std::string& s, long& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double wrap_degrees(double v) {
    double w = std::fmod(v, 360.0);
    if (w < 0) w += 360.0;
    return w;
}

struct TrackingColumns {
    int time, x, y, s, a, o, dir, event, nfl_id, frame_id, team, game_id, play_id, play_direction;
};

TrackingColumns require_tracking_columns(const CsvReader& reader) {
    auto need = [&](const char* name) {
        int idx = reader.column(name);
        if (idx < 0) throw MissingColumnError(name);
        return idx;
    };
    return TrackingColumns{
        need("time"),  need("x"),       need("y"),    need("s"),
        need("a"),     need("o"),       need("dir"),  need("event"),
        need("nflId"), need("frameId"), need("team"), need("gameId"),
        need("playId"), need("playDirection"),
    };
}

}  // namespace

std::string normalize_team_code(const std::string& raw) {
    size_t b = 0, e = raw.size();
    while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string out = raw.substr(b, e - b);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

ParseResult parse_tracking_file(std::istream& in, const std::string& file_label) {
    ParseResult result;
    CsvReader reader(in);
    TrackingColumns col = require_tracking_columns(reader);

    std::vector<std::string> row;
    size_t line_no = 0;
    while (reader.next(row, line_no)) {
        auto fail = [&](const std::string& why) {
            result.errors.push_back({file_label, line_no, why});
        };
        size_t needed = static_cast<size_t>(std::max(
            {col.time, col.x, col.y, col.s, col.a, col.o, col.dir, col.event, col.nfl_id,
             col.frame_id, col.team, col.game_id, col.play_id, col.play_direction})) + 1;
        if (row.size() < needed) {
            fail("too few fields");
            continue;
        }

        TrackingRecord rec;
        try {
            rec.timestamp_ms = parse_iso8601_ms(row[col.time]);
        } catch (const std::exception& e) {
            fail(std::string("time: ") + e.what());
            continue;
        }
        if (!parse_double(row[col.x], rec.x)) { fail("x: not a number"); continue; }
        if (!parse_double(row[col.y], rec.y)) { fail("y: not a number"); continue; }
        if (!parse_double(row[col.s], rec.speed)) { fail("s: not a number"); continue; }
        if (!parse_double(row[col.a], rec.accel)) { fail("a: not a number"); continue; }
        if (rec.speed < 0) { fail("s: negative"); continue; }
        if (rec.accel < 0) { fail("a: negative"); continue; }
        long frame = 0;
        if (!parse_long(row[col.frame_id], frame)) { fail("frameId: not an integer"); continue; }
        rec.frame_id = static_cast<int>(frame);
        if (!parse_long(row[col.game_id], rec.game_id)) { fail("gameId: not an integer"); continue; }
        if (!parse_long(row[col.play_id], rec.play_id)) { fail("playId: not an integer"); continue; }

        const std::string dir_token = lower(row[col.play_direction]);
        if (dir_token == "left") rec.play_direction = PlayDirection::left;
        else if (dir_token == "right") rec.play_direction = PlayDirection::right;
        else { fail("playDirection: expected left/right"); continue; }

        rec.team_raw = row[col.team];
        const std::string team_token = lower(rec.team_raw);
        if (team_token == "football") rec.side = Side::ball;
        else if (team_token == "home") rec.side = Side::home;
        else if (team_token == "away") rec.side = Side::away;
        else rec.side = Side::home;  // team-code form, resolved against GameMeta at load

        if (!is_absent(row[col.nfl_id])) {
            long id = 0;
            if (!parse_long(row[col.nfl_id], id)) { fail("nflId: not an integer"); continue; }
            rec.nfl_id = id;
        }
        if (rec.side == Side::ball && rec.nfl_id) { fail("ball row with nflId"); continue; }
        if (rec.side != Side::ball && !rec.nfl_id && team_token != "football") {
            fail("player row without nflId");
            continue;
        }

        // Ball rows carry no orientation/direction even if the source file
        // put numbers there.
        if (rec.side != Side::ball) {
            if (!is_absent(row[col.o])) {
                double v = 0;
                if (!parse_double(row[col.o], v)) { fail("o: not a number"); continue; }
                rec.orientation_deg = wrap_degrees(v);
            }
            if (!is_absent(row[col.dir])) {
                double v = 0;
                if (!parse_double(row[col.dir], v)) { fail("dir: not a number"); continue; }
                rec.direction_deg = wrap_degrees(v);
            }
        }

        if (!is_absent(row[col.event])) rec.event = row[col.event];

        // GPS jitter can step outside the field; clamp and count rather
        // than dropping the row.
        bool clamped = false;
        if (rec.x < 0) { rec.x = 0; clamped = true; }
        if (rec.x > kFieldLengthYd) { rec.x = kFieldLengthYd; clamped = true; }
        if (rec.y < 0) { rec.y = 0; clamped = true; }
        if (rec.y > kFieldWidthYd) { rec.y = kFieldWidthYd; clamped = true; }
        if (clamped) ++result.clamped_coordinates;

        result.records.push_back(std::move(rec));
    }
    return result;
}

std::vector<PlayMeta> parse_plays_file(std::istream& in) {
    CsvReader reader(in);
    int c_game = reader.column("gameId");
    int c_play = reader.column("playId");
    int c_poss = reader.column("possessionTeam");
    if (c_game < 0) throw MissingColumnError("gameId");
    if (c_play < 0) throw MissingColumnError("playId");
    if (c_poss < 0) throw MissingColumnError("possessionTeam");
    int c_dpi = reader.column("isDefensivePI");
    int c_pen = reader.column("penaltyCodes");

    std::vector<PlayMeta> out;
    std::vector<std::string> row;
    size_t line_no = 0;
    while (reader.next(row, line_no)) {
        PlayMeta m;
        if (static_cast<size_t>(std::max(c_game, std::max(c_play, c_poss))) >= row.size()) continue;
        if (!parse_long(row[c_game], m.game_id)) continue;
        if (!parse_long(row[c_play], m.play_id)) continue;
        m.possession_team = normalize_team_code(row[c_poss]);
        if (c_dpi >= 0 && static_cast<size_t>(c_dpi) < row.size() && !is_absent(row[c_dpi])) {
            const std::string v = lower(row[c_dpi]);
            if (v == "true" || v == "1") m.dpi_flag = true;
            else if (v == "false" || v == "0") m.dpi_flag = false;
        }
        if (c_pen >= 0 && static_cast<size_t>(c_pen) < row.size() && !is_absent(row[c_pen]))
            m.penalty_codes = row[c_pen];
        m.is_dpi = resolve_label(m);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<GameMeta> parse_games_file(std::istream& in) {
    CsvReader reader(in);
    int c_game = reader.column("gameId");
    int c_home = reader.column("homeTeamAbbr");
    int c_vis = reader.column("visitorTeamAbbr");
    int c_week = reader.column("week");
    if (c_game < 0) throw MissingColumnError("gameId");
    if (c_home < 0) throw MissingColumnError("homeTeamAbbr");
    if (c_vis < 0) throw MissingColumnError("visitorTeamAbbr");
    if (c_week < 0) throw MissingColumnError("week");

    std::vector<GameMeta> out;
    std::vector<std::string> row;
    size_t line_no = 0;
    while (reader.next(row, line_no)) {
        GameMeta g;
        if (static_cast<size_t>(std::max({c_game, c_home, c_vis, c_week})) >= row.size()) continue;
        if (!parse_long(row[c_game], g.game_id)) continue;
        g.home_team = normalize_team_code(row[c_home]);
        g.visitor_team = normalize_team_code(row[c_vis]);
        long wk = 0;
        if (!parse_long(row[c_week], wk)) continue;
        g.week = static_cast<int>(wk);
        out.push_back(std::move(g));
    }
    return out;
}

bool resolve_label(const PlayMeta& meta) {
    if (meta.dpi_flag) return *meta.dpi_flag;
    if (!meta.penalty_codes) return false;
    const std::string& codes = *meta.penalty_codes;
    std::string token;
    auto flush = [&]() {
        std::string t = normalize_team_code(token);  // trim + uppercase
        token.clear();
        return t == "DPI";
    };
    for (char c : codes) {
        if (c == ';' || c == ',') {
            if (flush()) return true;
        } else {
            token.push_back(c);
        }
    }
    return flush();
}

RawDataset load_dataset(const std::string& data_dir) {
    RawDataset ds;

    auto open = [&](const std::string& name) {
        fs::path p = fs::path(data_dir) / name;
        if (!fs::exists(p)) throw MissingFileError(p.string());
        return std::ifstream(p);
    };

    {
        auto in = open("games.csv");
        for (auto& g : parse_games_file(in)) ds.game_meta.emplace(g.game_id, g);
    }
    {
        auto in = open("plays.csv");
        for (auto& m : parse_plays_file(in)) ds.play_meta.emplace(PlayKey{m.game_id, m.play_id}, m);
    }

    std::vector<std::string> week_files;
    for (int w = 1; w <= 17; ++w) {
        fs::path p = fs::path(data_dir) / ("week" + std::to_string(w) + ".csv");
        if (fs::exists(p)) week_files.push_back(p.string());
    }
    if (week_files.empty()) throw MissingFileError(data_dir + "/week1.csv");

    std::vector<std::future<ParseResult>> parses;
    parses.reserve(week_files.size());
    for (const auto& path : week_files) {
        parses.push_back(std::async(std::launch::async, [path]() {
            std::ifstream in(path);
            if (!in) throw MissingFileError(path);
            return parse_tracking_file(in, fs::path(path).filename().string());
        }));
    }

    LoadReport& rep = ds.report;
    std::map<PlayKey, std::vector<TrackingRecord>> grouped;
    std::map<PlayKey, long> unjoined_rows;
    for (auto& fut : parses) {  // merge in file order
        ParseResult pr = fut.get();
        rep.rows_read += static_cast<long>(pr.records.size() + pr.errors.size());
        rep.rows_malformed += static_cast<long>(pr.errors.size());
        rep.rows_parsed += static_cast<long>(pr.records.size());
        rep.clamped_coordinates += pr.clamped_coordinates;
        for (auto& e : pr.errors) rep.row_errors.push_back(std::move(e));
        for (auto& rec : pr.records) {
            PlayKey key = rec.key();
            if (!ds.play_meta.count(key)) {
                ++unjoined_rows[key];
                continue;
            }
            grouped[key].push_back(std::move(rec));
        }
    }

    for (auto& [key, rows] : unjoined_rows) {
        rep.join_failures.push_back({key.game_id, key.play_id, rows, "no play metadata"});
        rep.rows_skipped += rows;
    }

    for (auto& [key, recs] : grouped) {
        const PlayMeta& meta = ds.play_meta.at(key);
        auto gm_it = ds.game_meta.find(key.game_id);
        if (gm_it == ds.game_meta.end()) {
            rep.join_failures.push_back(
                {key.game_id, key.play_id, static_cast<long>(recs.size()), "no game metadata"});
            rep.rows_skipped += static_cast<long>(recs.size());
            continue;
        }
        const GameMeta& gm = gm_it->second;

        Side possession;
        if (meta.possession_team == gm.home_team) possession = Side::home;
        else if (meta.possession_team == gm.visitor_team) possession = Side::away;
        else {
            rep.join_failures.push_back({key.game_id, key.play_id,
                                         static_cast<long>(recs.size()),
                                         "possession team matches neither side"});
            rep.rows_skipped += static_cast<long>(recs.size());
            continue;
        }

        RawPlay play;
        play.key = key;
        play.meta = meta;
        play.possession_side = possession;

        std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
            if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
            return a.frame_id < b.frame_id;
        });

        // Resolve team-code sides and drop duplicate (entity, frame) rows.
        std::set<std::pair<long, int>> seen;  // (entity id, frame), ball as -1
        long dup_rows = 0;
        for (auto& rec : recs) {
            const std::string token = lower(rec.team_raw);
            if (token != "home" && token != "away" && token != "football") {
                const std::string code = normalize_team_code(rec.team_raw);
                if (code == gm.home_team) rec.side = Side::home;
                else if (code == gm.visitor_team) rec.side = Side::away;
                else {
                    ++dup_rows;  // unresolvable side, skip row
                    continue;
                }
            }
            long ent = rec.nfl_id ? *rec.nfl_id : -1;
            if (!seen.emplace(ent, rec.frame_id).second) {
                ++dup_rows;
                continue;
            }
            play.records.push_back(std::move(rec));
        }
        if (dup_rows) rep.rows_skipped += dup_rows;

        rep.rows_joined += static_cast<long>(play.records.size());
        ds.plays.push_back(std::move(play));
    }

    for (const auto& [key, meta] : ds.play_meta) {
        (void)meta;
        if (!grouped.count(key)) rep.plays_without_tracking.push_back(key);
    }

    rep.plays_loaded = static_cast<long>(ds.plays.size());
    return ds;
}

std::string LoadReport::to_json() const {
    json j;
    j["rows_read"] = rows_read;
    j["rows_malformed"] = rows_malformed;
    j["rows_parsed"] = rows_parsed;
    j["rows_skipped"] = rows_skipped;
    j["rows_joined"] = rows_joined;
    j["plays_loaded"] = plays_loaded;
    j["clamped_coordinates"] = clamped_coordinates;
    json errs = json::array();
    for (const auto& e : row_errors)
        errs.push_back({{"file", e.file}, {"line", e.line_no}, {"reason", e.reason}});
    j["row_errors"] = errs;
    json joins = json::array();
    for (const auto& f : join_failures)
        joins.push_back({{"game_id", f.game_id}, {"play_id", f.play_id},
                         {"rows", f.rows}, {"reason", f.reason}});
    j["join_failures"] = joins;
    json missing = json::array();
    for (const auto& k : plays_without_tracking)
        missing.push_back({{"game_id", k.game_id}, {"play_id", k.play_id}});
    j["plays_without_tracking"] = missing;
    return j.dump(2);
}

const std::vector<std::string>& tracking_columns() {
    static const std::vector<std::string> cols = {
        "time", "x", "y", "s", "a", "o", "dir", "event",
        "nflId", "frameId", "team", "gameId", "playId", "playDirection"};
    return cols;
}

std::vector<std::string> serialize_tracking_record(const TrackingRecord& rec) {
    std::vector<std::string> row(14);
    row[0] = format_iso8601_ms(rec.timestamp_ms);
    row[1] = format_double(rec.x);
    row[2] = format_double(rec.y);
    row[3] = format_double(rec.speed);
    row[4] = format_double(rec.accel);
    row[5] = rec.orientation_deg ? format_double(*rec.orientation_deg) : "";
    row[6] = rec.direction_deg ? format_double(*rec.direction_deg) : "";
    row[7] = rec.event ? *rec.event : "";
    row[8] = rec.nfl_id ? std::to_string(*rec.nfl_id) : "";
    row[9] = std::to_string(rec.frame_id);
    row[10] = !rec.team_raw.empty()
                  ? rec.team_raw
                  : (rec.side == Side::ball ? "football"
                                            : (rec.side == Side::home ? "home" : "away"));
    row[11] = std::to_string(rec.game_id);
    row[12] = std::to_string(rec.play_id);
    row[13] = rec.play_direction == PlayDirection::left ? "left" : "right";
    return row;
}

}
