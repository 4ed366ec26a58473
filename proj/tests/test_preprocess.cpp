#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>
#include <string>
#include <vector>

#include "dpi/preprocess.hpp"

using namespace dpi;

namespace {

TrackingRecord rec(int frame_id, int64_t ts, std::optional<long> id,
                   std::optional<std::string> event = std::nullopt) {
    TrackingRecord r;
    r.game_id = 1;
    r.play_id = 10;
    r.frame_id = frame_id;
    r.timestamp_ms = ts;
    r.nfl_id = id;
    r.side = id ? (*id % 2 == 0 ? Side::away : Side::home) : Side::ball;
    r.x = 50.0;
    r.y = 25.0;
    if (id) {
        r.orientation_deg = 10.0;
        r.direction_deg = 20.0;
    }
    r.event = std::move(event);
    return r;
}

RawPlay play_of(std::vector<TrackingRecord> records, bool dpi = false) {
    RawPlay p;
    p.key = {1, 10};
    p.meta.game_id = 1;
    p.meta.play_id = 10;
    p.meta.is_dpi = dpi;
    p.possession_side = Side::home;
    p.records = std::move(records);
    return p;
}

// one play with events at chosen frames, 100 ms apart
PlayFrames frames_with_events(const std::vector<std::optional<std::string>>& events) {
    std::vector<TrackingRecord> records;
    for (size_t f = 0; f < events.size(); ++f) {
        records.push_back(rec(static_cast<int>(f + 1), 1000 + 100 * static_cast<int64_t>(f), 1,
                              events[f]));
        records.push_back(rec(static_cast<int>(f + 1), 1000 + 100 * static_cast<int64_t>(f), 2));
    }
    return group_play(play_of(std::move(records)));
}

}  // namespace

TEST_CASE("grouping keys frames by timestamp and frame id") {
    std::vector<TrackingRecord> records;
    records.push_back(rec(1, 1000, 1));
    records.push_back(rec(1, 1000, 2));
    records.push_back(rec(1, 1000, std::nullopt));
    records.push_back(rec(2, 1100, 1, "pass_forward"));
    records.push_back(rec(2, 1100, 2));
    records.push_back(rec(3, 1100, 1));  // same stamp, new frame id

    const PlayFrames play = group_play(play_of(std::move(records), true));
    REQUIRE(play.frames.size() == 3);
    CHECK(play.label);
    CHECK(play.frames[0].entities.size() == 3);
    CHECK(!play.frames[0].event.has_value());
    CHECK(play.frames[1].event == "pass_forward");
    CHECK(play.frames[2].frame_id == 3);
    CHECK(play.frames[2].timestamp_ms == 1100);
}

TEST_CASE("grouping rejects frames holding more than 23 entities") {
    std::vector<TrackingRecord> records;
    for (long id = 1; id <= 24; ++id) records.push_back(rec(1, 1000, id));
    CHECK_THROWS_AS(group_play(play_of(std::move(records))), PlayFormatError);
}

TEST_CASE("the \"None\" tag is not an event") {
    Frame f;
    CHECK(!frame_has_event(f));
    f.event = "None";
    CHECK(!frame_has_event(f));
    f.event = "tackle";
    CHECK(frame_has_event(f));
}

TEST_CASE("dedup re-stamps shared timestamps in 10 ms steps") {
    std::vector<TrackingRecord> records;
    records.push_back(rec(1, 1000, 1));
    records.push_back(rec(2, 1000, 1));
    records.push_back(rec(3, 1000, 1));
    records.push_back(rec(4, 1100, 1));
    records.push_back(rec(5, 1100, 1));
    PlayFrames play = group_play(play_of(std::move(records)));

    const DedupStats stats = dedup_timestamps(play);
    CHECK(stats.groups_rewritten == 2);
    CHECK(play.frames[0].timestamp_ms == 1000);
    CHECK(play.frames[1].timestamp_ms == 1010);
    CHECK(play.frames[2].timestamp_ms == 1020);
    CHECK(play.frames[3].timestamp_ms == 1100);
    CHECK(play.frames[4].timestamp_ms == 1110);

    // idempotent: a second pass finds nothing to rewrite
    const DedupStats again = dedup_timestamps(play);
    CHECK(again.groups_rewritten == 0);
    CHECK(play.frames[1].timestamp_ms == 1010);
}

TEST_CASE("dedup refuses to cross the next native stamp") {
    std::vector<TrackingRecord> records;
    records.push_back(rec(1, 1000, 1));
    records.push_back(rec(2, 1000, 1));
    records.push_back(rec(3, 1010, 1));  // re-stamping frame 2 would land here
    PlayFrames play = group_play(play_of(std::move(records)));
    CHECK_THROWS_AS(dedup_timestamps(play), DedupOverflowError);
}

TEST_CASE("pass filter keeps tagged plays and counts extra tags") {
    std::vector<PlayFrames> plays;
    plays.push_back(frames_with_events({std::nullopt, "pass_forward", std::nullopt}));
    plays.push_back(frames_with_events({std::nullopt, std::nullopt}));
    plays.push_back(frames_with_events({"pass_forward", std::nullopt, "pass_forward"}));

    long multi = 0;
    const auto kept = filter_forward_pass_plays(std::move(plays), &multi);
    REQUIRE(kept.size() == 2);
    CHECK(multi == 1);
    CHECK(kept[0].pass_forward_index == 1);
    CHECK(kept[1].pass_forward_index == 0);  // first tag wins
}

TEST_CASE("trimming drops everything before the throw") {
    PlayFrames play = frames_with_events({std::nullopt, "ball_snap", "pass_forward", "tackle"});
    play.pass_forward_index = 2;
    trim_to_pass_window(play);
    REQUIRE(play.frames.size() == 2);
    CHECK(play.pass_forward_index == 0);
    CHECK(play.frames[0].event == "pass_forward");
    CHECK(!play.end_event_index.has_value());
}

TEST_CASE("the end event is the first tag after the throw") {
    PlayFrames play = frames_with_events(
        {"pass_forward", std::nullopt, "None", "pass_arrived", "tackle"});
    play.pass_forward_index = 0;
    find_end_event(play);
    CHECK(play.end_event_index == 3);
    CHECK(play.end_event_name == "pass_arrived");

    PlayFrames bare = frames_with_events({"pass_forward", std::nullopt, "None"});
    bare.pass_forward_index = 0;
    CHECK_THROWS_AS(find_end_event(bare), NoEndEventError);
}

TEST_CASE("the full chain trims, anchors and counts failures") {
    RawDataset ds;

    // clean play: snap, throw, arrival
    {
        std::vector<TrackingRecord> records;
        records.push_back(rec(1, 1000, 1, "ball_snap"));
        records.push_back(rec(2, 1100, 1));
        records.push_back(rec(3, 1200, 1, "pass_forward"));
        records.push_back(rec(4, 1300, 1));
        records.push_back(rec(5, 1400, 1, "pass_arrived"));
        RawPlay p = play_of(std::move(records), true);
        p.key = {1, 10};
        ds.plays.push_back(std::move(p));
    }
    // no pass_forward
    {
        std::vector<TrackingRecord> records;
        records.push_back(rec(1, 1000, 1, "ball_snap"));
        records.push_back(rec(2, 1100, 1, "tackle"));
        RawPlay p = play_of(std::move(records));
        p.key = {1, 20};
        ds.plays.push_back(std::move(p));
    }
    // throw but nothing after it
    {
        std::vector<TrackingRecord> records;
        records.push_back(rec(1, 1000, 1));
        records.push_back(rec(2, 1100, 1, "pass_forward"));
        records.push_back(rec(3, 1200, 1));
        RawPlay p = play_of(std::move(records));
        p.key = {1, 30};
        ds.plays.push_back(std::move(p));
    }
    // duplicate stamps that dedup can fix
    {
        std::vector<TrackingRecord> records;
        records.push_back(rec(1, 1000, 1, "pass_forward"));
        records.push_back(rec(2, 1000, 1));
        records.push_back(rec(3, 1200, 1, "tackle"));
        RawPlay p = play_of(std::move(records));
        p.key = {1, 40};
        ds.plays.push_back(std::move(p));
    }

    PreprocessReport report;
    const auto plays = run_preprocess(ds, report);

    CHECK(report.plays_in == 4);
    CHECK(report.plays_without_pass_forward == 1);
    CHECK(report.plays_without_end_event == 1);
    CHECK(report.duplicate_timestamp_groups == 1);
    CHECK(report.plays_multiple_pass_forward == 0);
    CHECK(report.plays_dedup_overflow == 0);
    CHECK(report.plays_malformed == 0);

    REQUIRE(plays.size() == 2);
    for (const auto& p : plays) {
        CHECK(p.pass_forward_index == 0);
        CHECK(p.frames[0].event == "pass_forward");
        REQUIRE(p.end_event_index.has_value());
        CHECK(*p.end_event_index > 0);
        CHECK(frame_has_event(p.frames[*p.end_event_index]));
    }
    CHECK(plays[0].label);
    CHECK(plays[0].play_id == 10);
    CHECK(plays[1].play_id == 40);
    CHECK(plays[1].end_event_name == "tackle");

    const std::string j = report.to_json();
    CHECK(j.find("\"plays_in\": 4") != std::string::npos);
}
