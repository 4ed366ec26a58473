#include "dpi/pipeline.hpp"

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace dpi {

std::string BuildReport::to_json() const {
    json j;
    j["preprocess"] = json::parse(preprocess.to_json());
    j["sequences_assembled"] = sequences_assembled;
    j["plays_dropped_assembly"] = plays_dropped_assembly;
    j["sequences_after_proximity"] = sequences_after_proximity;
    j["positives_after_proximity"] = positives_after_proximity;
    j["negatives_after_proximity"] = negatives_after_proximity;
    j["proximity_threshold"] = proximity_threshold;
    j["threshold_overridden"] = threshold_overridden;
    return j.dump(2);
}

BuiltDataset build_dataset(const RawDataset& raw, const BuildOptions& opt, BuildReport& report) {
    auto plays = run_preprocess(raw, report.preprocess);

    std::vector<PlaySequence> sequences;
    sequences.reserve(plays.size());
    for (auto& play : plays) {
        normalize_direction(play);
        try {
            const DuelPair duel = select_duel(play, *play.end_event_index);
            sequences.push_back(assemble_sequence(play, duel, play.label));
        } catch (const MissingBallError&) {
            ++report.plays_dropped_assembly;
        } catch (const EmptySideError&) {
            ++report.plays_dropped_assembly;
        } catch (const EmptySequenceError&) {
            ++report.plays_dropped_assembly;
        }
    }
    report.sequences_assembled = static_cast<long>(sequences.size());

    double threshold;
    if (opt.threshold_override) {
        threshold = *opt.threshold_override;
        report.threshold_overridden = true;
    } else {
        threshold = compute_proximity_threshold(sequences, opt.quantile);
    }
    report.proximity_threshold = threshold;

    const auto kept = filter_by_proximity(sequences, threshold);
    report.sequences_after_proximity = static_cast<long>(kept.size());
    for (const auto& s : kept)
        (s.label ? report.positives_after_proximity : report.negatives_after_proximity) += 1;

    SplitResult split = split_dataset(kept, opt.fractions, opt.seed);

    long train_neg = 0, train_pos = 0;
    for (const auto& s : split.train) (s.label ? train_pos : train_neg) += 1;

    BuiltDataset ds;
    ds.seed = opt.seed;
    ds.seq_len = opt.seq_len;
    ds.fractions = opt.fractions;
    ds.proximity_threshold = threshold;
    ds.threshold_overridden = report.threshold_overridden;
    ds.weights_computed = class_weights({train_neg, train_pos});
    if (opt.weights_override) {
        ds.weights_effective = *opt.weights_override;
    } else {
        ds.weights_effective = {ds.weights_computed.w_class[0], ds.weights_computed.w_class[1]};
    }
    ds.scaler = fit_scaler(split.train);

    auto finish = [&](std::vector<PlaySequence>& in, std::vector<SequenceEx>& out) {
        out.reserve(in.size());
        for (auto& seq : in) {
            apply_scaler(ds.scaler, seq);
            PaddedSequence padded = pad_or_truncate(seq, opt.seq_len);
            SequenceEx ex;
            ex.game_id = seq.game_id;
            ex.play_id = seq.play_id;
            ex.label = seq.label;
            ex.x = std::move(padded.x);
            ex.mask = std::move(padded.mask);
            out.push_back(std::move(ex));
        }
    };
    finish(split.train, ds.train);
    finish(split.validation, ds.validation);
    finish(split.test, ds.test);
    return ds;
}

}
