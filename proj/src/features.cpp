#include "dpi/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dpi/rng.hpp"

namespace dpi {

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "att_speed", "att_accel", "att_orient_deg", "att_dir_deg",
        "def_speed", "def_accel", "def_orient_deg", "def_dir_deg",
        "ball_speed", "ball_accel",
        "dist_att_def", "dist_att_ball", "dist_def_ball",
        "pass_arrived", "pass_outcome_caught", "tackle",
        "first_contact", "pass_outcome_incomplete", "out_of_bounds"};
    return names;
}

const std::array<std::string, 6>& flag_event_names() {
    static const std::array<std::string, 6> names = {
        "pass_arrived", "pass_outcome_caught", "tackle",
        "first_contact", "pass_outcome_incomplete", "out_of_bounds"};
    return names;
}

double euclidean(double px, double py, double qx, double qy) {
    const double dx = px - qx;
    const double dy = py - qy;
    return std::sqrt(dx * dx + dy * dy);
}

namespace {

double rotate_180(double deg) {
    double v = deg + 180.0;
    if (v >= 360.0) v -= 360.0;
    return v;
}

}  // namespace

void normalize_direction(PlayFrames& play) {
    for (auto& frame : play.frames) {
        for (auto& rec : frame.entities) {
            if (rec.play_direction == PlayDirection::right) continue;
            rec.x = kFieldLengthYd - rec.x;
            rec.y = kFieldWidthYd - rec.y;
            if (rec.orientation_deg) rec.orientation_deg = rotate_180(*rec.orientation_deg);
            if (rec.direction_deg) rec.direction_deg = rotate_180(*rec.direction_deg);
            rec.play_direction = PlayDirection::right;
        }
    }
}

DuelPair select_duel(const PlayFrames& play, size_t end_event_index) {
    const Frame& frame = play.frames.at(end_event_index);

    const TrackingRecord* ball = nullptr;
    for (const auto& rec : frame.entities)
        if (rec.is_ball()) { ball = &rec; break; }
    if (!ball) throw MissingBallError();

    const Side att_side = play.possession_side;
    const Side def_side = att_side == Side::home ? Side::away : Side::home;

    auto closest = [&](Side side) -> const TrackingRecord* {
        const TrackingRecord* best = nullptr;
        double best_dist = 0.0;
        for (const auto& rec : frame.entities) {
            if (rec.side != side || !rec.nfl_id) continue;
            double d = euclidean(rec.x, rec.y, ball->x, ball->y);
            if (!best || d < best_dist ||
                (d == best_dist && *rec.nfl_id < *best->nfl_id)) {
                best = &rec;
                best_dist = d;
            }
        }
        return best;
    };

    const TrackingRecord* attacker = closest(att_side);
    const TrackingRecord* defender = closest(def_side);
    if (!attacker || !defender) throw EmptySideError();
    return {*attacker->nfl_id, *defender->nfl_id};
}

PlaySequence assemble_sequence(const PlayFrames& play, const DuelPair& duel, bool label) {
    PlaySequence seq;
    seq.game_id = play.game_id;
    seq.play_id = play.play_id;
    seq.attacker_id = duel.attacker_id;
    seq.defender_id = duel.defender_id;
    seq.label = label;

    std::array<double, 6> flags{};
    for (const auto& frame : play.frames) {
        if (!frame_has_event(frame)) continue;
        const auto& names = flag_event_names();
        for (size_t i = 0; i < names.size(); ++i)
            if (*frame.event == names[i]) flags[i] = 1.0;
    }

    for (const auto& frame : play.frames) {
        const TrackingRecord* att = nullptr;
        const TrackingRecord* def = nullptr;
        const TrackingRecord* ball = nullptr;
        for (const auto& rec : frame.entities) {
            if (rec.is_ball()) ball = &rec;
            else if (rec.nfl_id && *rec.nfl_id == duel.attacker_id) att = &rec;
            else if (rec.nfl_id && *rec.nfl_id == duel.defender_id) def = &rec;
        }
        if (!att || !def || !ball ||
            !att->orientation_deg || !att->direction_deg ||
            !def->orientation_deg || !def->direction_deg) {
            ++seq.dropped_frames;
            continue;
        }

        FeatureVector fv;
        fv.v[0] = att->speed;
        fv.v[1] = att->accel;
        fv.v[2] = *att->orientation_deg;
        fv.v[3] = *att->direction_deg;
        fv.v[4] = def->speed;
        fv.v[5] = def->accel;
        fv.v[6] = *def->orientation_deg;
        fv.v[7] = *def->direction_deg;
        fv.v[8] = ball->speed;
        fv.v[9] = ball->accel;
        fv.v[10] = euclidean(att->x, att->y, def->x, def->y);
        fv.v[11] = euclidean(att->x, att->y, ball->x, ball->y);
        fv.v[12] = euclidean(def->x, def->y, ball->x, ball->y);
        for (int i = 0; i < 6; ++i) fv.v[13 + i] = flags[i];
        seq.steps.push_back(fv);
    }

    if (seq.steps.empty()) throw EmptySequenceError();
    seq.max_duel_distance = 0.0;
    for (const auto& s : seq.steps)
        seq.max_duel_distance = std::max(seq.max_duel_distance, s.v[10]);
    return seq;
}

double compute_proximity_threshold(const std::vector<PlaySequence>& sequences, double quantile) {
    std::vector<double> values;
    for (const auto& s : sequences)
        if (s.label) values.push_back(s.max_duel_distance);
    if (values.empty()) throw NoDpiPlaysError();
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double h = quantile * static_cast<double>(values.size() - 1);
    auto lo = static_cast<size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<PlaySequence> filter_by_proximity(const std::vector<PlaySequence>& sequences,
                                              double threshold) {
    std::vector<PlaySequence> kept;
    kept.reserve(sequences.size());
    for (const auto& s : sequences)
        if (s.max_duel_distance <= threshold) kept.push_back(s);
    return kept;
}

SplitResult split_dataset(const std::vector<PlaySequence>& sequences,
                          std::array<double, 3> fractions, uint64_t seed) {
    std::vector<size_t> neg, pos;
    for (size_t i = 0; i < sequences.size(); ++i)
        (sequences[i].label ? pos : neg).push_back(i);
    if (neg.size() < 3 || pos.size() < 3) throw ClassTooSmallError();

    SplitResult out;
    Rng rng(seed);
    for (auto* members : {&neg, &pos}) {
        rng.shuffle(*members);
        auto n = static_cast<double>(members->size());
        auto n_train = static_cast<size_t>(std::llround(n * fractions[0]));
        auto n_val = static_cast<size_t>(std::llround(n * fractions[1]));
        n_train = std::min(n_train, members->size());
        n_val = std::min(n_val, members->size() - n_train);
        for (size_t i = 0; i < members->size(); ++i) {
            const PlaySequence& s = sequences[(*members)[i]];
            if (i < n_train) out.train.push_back(s);
            else if (i < n_train + n_val) out.validation.push_back(s);
            else out.test.push_back(s);
        }
    }

    auto by_key = [](const PlaySequence& a, const PlaySequence& b) {
        return std::pair{a.game_id, a.play_id} < std::pair{b.game_id, b.play_id};
    };
    std::sort(out.train.begin(), out.train.end(), by_key);
    std::sort(out.validation.begin(), out.validation.end(), by_key);
    std::sort(out.test.begin(), out.test.end(), by_key);
    return out;
}

ClassWeightSpec class_weights(const std::vector<long>& counts) {
    ClassWeightSpec spec;
    spec.n_classes = static_cast<int>(counts.size());
    spec.n_inst_class = counts;
    for (long c : counts) {
        if (c <= 0) throw ZeroCountError();
        spec.n_inst += c;
    }
    for (long c : counts)
        spec.w_class.push_back(static_cast<double>(spec.n_inst) /
                               (static_cast<double>(spec.n_classes) * static_cast<double>(c)));
    return spec;
}

Scaler fit_scaler(const std::vector<PlaySequence>& train) {
    Scaler sc;
    for (int f = 0; f < kFeatureCount; ++f) {
        sc.mean[f] = 0.0;
        sc.stddev[f] = 1.0;
    }
    long n = 0;
    std::array<double, kContinuousFeatureCount> sum{}, sumsq{};
    for (const auto& seq : train) {
        for (const auto& step : seq.steps) {
            for (int f = 0; f < kContinuousFeatureCount; ++f) {
                sum[f] += step.v[f];
                sumsq[f] += step.v[f] * step.v[f];
            }
            ++n;
        }
    }
    if (n == 0) return sc;
    for (int f = 0; f < kContinuousFeatureCount; ++f) {
        double mean = sum[f] / static_cast<double>(n);
        double var = sumsq[f] / static_cast<double>(n) - mean * mean;
        sc.mean[f] = mean;
        sc.stddev[f] = var > 0 ? std::sqrt(var) : 0.0;
    }
    return sc;
}

void apply_scaler(const Scaler& scaler, PlaySequence& seq) {
    for (auto& step : seq.steps) {
        for (int f = 0; f < kContinuousFeatureCount; ++f) {
            if (scaler.stddev[f] < 1e-8) step.v[f] = 0.0;
            else step.v[f] = (step.v[f] - scaler.mean[f]) / scaler.stddev[f];
        }
    }
}

PaddedSequence pad_or_truncate(const PlaySequence& seq, int seq_len) {
    PaddedSequence out;
    out.x = Mat(seq_len, kFeatureCount);
    out.mask.assign(static_cast<size_t>(seq_len), 0);

    auto total = static_cast<long>(seq.steps.size());
    long keep = std::min<long>(total, seq_len);
    long src_begin = total - keep;   // newest steps survive truncation
    long dst_begin = seq_len - keep; // left padding
    for (long i = 0; i < keep; ++i) {
        const auto& step = seq.steps[static_cast<size_t>(src_begin + i)];
        double* row = out.x.row(static_cast<int>(dst_begin + i));
        std::copy(step.v.begin(), step.v.end(), row);
        out.mask[static_cast<size_t>(dst_begin + i)] = 1;
    }
    return out;
}

}
