#include "dpi/preprocess.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

using json = nlohmann::json;

namespace dpi {

bool frame_has_event(const Frame& f) {
    return f.event.has_value() && *f.event != "None";
}

PlayFrames group_play(const RawPlay& play) {
    PlayFrames out;
    out.game_id = play.key.game_id;
    out.play_id = play.key.play_id;
    out.possession_side = play.possession_side;
    out.label = play.meta.is_dpi;

    for (const auto& rec : play.records) {
        if (out.frames.empty() || out.frames.back().timestamp_ms != rec.timestamp_ms ||
            out.frames.back().frame_id != rec.frame_id) {
            Frame f;
            f.timestamp_ms = rec.timestamp_ms;
            f.frame_id = rec.frame_id;
            out.frames.push_back(std::move(f));
        }
        Frame& f = out.frames.back();
        if (!f.event && rec.event) f.event = rec.event;
        f.entities.push_back(rec);
        if (f.entities.size() > kMaxEntitiesPerFrame)
            throw PlayFormatError("frame holds more than 23 entity records");
    }
    return out;
}

DedupStats dedup_timestamps(PlayFrames& play) {
    DedupStats stats;
    auto& frames = play.frames;
    size_t i = 0;
    while (i < frames.size()) {
        size_t j = i + 1;
        while (j < frames.size() && frames[j].timestamp_ms == frames[i].timestamp_ms) ++j;
        if (j - i > 1) {
            ++stats.groups_rewritten;
            int64_t next_native =
                j < frames.size() ? frames[j].timestamp_ms : std::numeric_limits<int64_t>::max();
            for (size_t k = i + 1; k < j; ++k) {
                int64_t stamped = frames[i].timestamp_ms +
                                  static_cast<int64_t>(k - i) * kDedupStepMs;
                if (stamped >= next_native) throw DedupOverflowError();
                frames[k].timestamp_ms = stamped;
            }
        }
        i = j;
    }
    for (size_t k = 1; k < frames.size(); ++k)
        if (frames[k].timestamp_ms <= frames[k - 1].timestamp_ms) throw DedupOverflowError();
    return stats;
}

std::vector<PlayFrames> filter_forward_pass_plays(std::vector<PlayFrames> plays,
                                                  long* multi_tag_plays) {
    std::vector<PlayFrames> kept;
    kept.reserve(plays.size());
    for (auto& play : plays) {
        long tags = 0;
        std::optional<size_t> first;
        for (size_t i = 0; i < play.frames.size(); ++i) {
            if (play.frames[i].event && *play.frames[i].event == kPassForwardEvent) {
                ++tags;
                if (!first) first = i;
            }
        }
        if (!first) continue;
        if (tags > 1 && multi_tag_plays) ++*multi_tag_plays;
        play.pass_forward_index = first;
        kept.push_back(std::move(play));
    }
    return kept;
}

void trim_to_pass_window(PlayFrames& play) {
    size_t idx = play.pass_forward_index.value();
    if (idx > 0) play.frames.erase(play.frames.begin(), play.frames.begin() + idx);
    play.pass_forward_index = 0;
    play.end_event_index.reset();
    play.end_event_name.reset();
}

void find_end_event(PlayFrames& play) {
    for (size_t i = 1; i < play.frames.size(); ++i) {
        if (frame_has_event(play.frames[i])) {
            play.end_event_index = i;
            play.end_event_name = play.frames[i].event;
            return;
        }
    }
    throw NoEndEventError();
}

std::vector<PlayFrames> run_preprocess(const RawDataset& ds, PreprocessReport& report) {
    report.plays_in = static_cast<long>(ds.plays.size());

    std::vector<PlayFrames> grouped;
    grouped.reserve(ds.plays.size());
    for (const auto& raw : ds.plays) {
        try {
            PlayFrames pf = group_play(raw);
            DedupStats st = dedup_timestamps(pf);
            report.duplicate_timestamp_groups += st.groups_rewritten;
            grouped.push_back(std::move(pf));
        } catch (const DedupOverflowError&) {
            ++report.plays_dedup_overflow;
        } catch (const PlayFormatError&) {
            ++report.plays_malformed;
        }
    }

    long before_pass = static_cast<long>(grouped.size());
    auto kept = filter_forward_pass_plays(std::move(grouped), &report.plays_multiple_pass_forward);
    report.plays_without_pass_forward = before_pass - static_cast<long>(kept.size());

    std::vector<PlayFrames> out;
    out.reserve(kept.size());
    for (auto& play : kept) {
        trim_to_pass_window(play);
        try {
            find_end_event(play);
        } catch (const NoEndEventError&) {
            ++report.plays_without_end_event;
            continue;
        }
        out.push_back(std::move(play));
    }
    return out;
}

std::string PreprocessReport::to_json() const {
    json j;
    j["plays_in"] = plays_in;
    j["plays_without_pass_forward"] = plays_without_pass_forward;
    j["plays_without_end_event"] = plays_without_end_event;
    j["duplicate_timestamp_groups"] = duplicate_timestamp_groups;
    j["plays_multiple_pass_forward"] = plays_multiple_pass_forward;
    j["plays_dedup_overflow"] = plays_dedup_overflow;
    j["plays_malformed"] = plays_malformed;
    return j.dump(2);
}

}
