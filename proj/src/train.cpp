#include "dpi/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dpi/csv.hpp"
#include "dpi/rng.hpp"

namespace fs = std::filesystem;

namespace dpi {

ThresholdChoice select_threshold(const std::vector<uint8_t>& labels,
                                 const std::vector<double>& scores, double recall_floor) {
    if (labels.size() != scores.size()) throw LengthMismatchError();
    long n_pos = 0;
    for (uint8_t l : labels) n_pos += l ? 1 : 0;
    if (n_pos == 0) throw NoPositivesError();

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a] > scores[b];
    });

    ThresholdChoice best;
    bool have_best = false;
    ThresholdChoice fallback;
    bool have_fallback = false;

    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double theta = scores[order[i]];
        while (i < order.size() && scores[order[i]] == theta) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        ThresholdChoice c;
        c.threshold = theta;
        c.recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        c.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        c.floor_met = c.recall >= recall_floor;

        if (c.floor_met) {
            // ties go to the higher threshold: earlier candidates win ties
            if (!have_best || c.precision > best.precision) {
                best = c;
                have_best = true;
            }
        }
        if (!have_fallback || c.recall > fallback.recall ||
            (c.recall == fallback.recall && c.precision > fallback.precision)) {
            fallback = c;
            have_fallback = true;
        }
    }
    return have_best ? best : fallback;
}

std::vector<double> score_split(const std::vector<SequenceEx>& split, const Parameters& p) {
    std::vector<double> scores;
    scores.reserve(split.size());
    for (const auto& s : split) scores.push_back(forward(s.x, s.mask, p));
    return scores;
}

std::vector<uint8_t> labels_of(const std::vector<SequenceEx>& split) {
    std::vector<uint8_t> labels;
    labels.reserve(split.size());
    for (const auto& s : split) labels.push_back(s.label ? 1 : 0);
    return labels;
}

namespace {

double mean_weighted_loss(const std::vector<SequenceEx>& split, const std::vector<double>& scores,
                          const std::array<double, 2>& w) {
    if (split.empty()) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < split.size(); ++i)
        total += weighted_bce(split[i].label ? 1.0 : 0.0, scores[i], w[1], w[0]);
    return total / static_cast<double>(split.size());
}

struct Objective {
    bool floor_met = false;
    double precision = 0.0;
    double recall = 0.0;

    bool better_than(const Objective& o) const {
        if (floor_met != o.floor_met) return floor_met;
        if (precision != o.precision) return precision > o.precision;
        return recall > o.recall;
    }
};

}  // namespace

TrainRunRecord train_model(const BuiltDataset& ds, const ModelConfig& config,
                           const TrainOptions& opt) {
    TrainRunRecord rec;
    rec.config = config;
    rec.seed = config.seed;

    Parameters params = init_parameters(config, config.seed);
    AdamState adam = init_adam(params);
    const auto val_labels = labels_of(ds.validation);

    Parameters best_params = params;
    Objective best_obj;
    ThresholdChoice best_choice;
    int stale = 0;

    auto evaluate = [&](int epoch, double train_loss) -> bool {
        const auto val_scores = score_split(ds.validation, params);
        const double val_loss = mean_weighted_loss(ds.validation, val_scores, opt.weights);
        if (!std::isfinite(val_loss)) {
            rec.failed = true;
            rec.failure = "non-finite validation loss at epoch " + std::to_string(epoch);
            return false;
        }
        const ThresholdChoice choice = select_threshold(val_labels, val_scores, opt.recall_floor);
        rec.history.push_back({epoch, train_loss, val_loss, choice.recall, choice.precision});

        Objective obj{choice.floor_met, choice.precision, choice.recall};
        if (epoch == 0 || obj.better_than(best_obj)) {
            best_obj = obj;
            best_choice = choice;
            best_params = params;
            rec.best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
        }
        return true;
    };

    const auto train_scores0 = score_split(ds.train, params);
    if (!evaluate(0, mean_weighted_loss(ds.train, train_scores0, opt.weights))) return rec;

    std::vector<size_t> order(ds.train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<Mat> acc;
    acc.reserve(params.tensors.size());
    for (const Mat& m : params.tensors) acc.emplace_back(m.rows, m.cols);

    for (int epoch = 1; epoch <= opt.epochs && !ds.train.empty(); ++epoch) {
        Rng rng(mix_seed(config.seed, static_cast<uint64_t>(epoch)));
        rng.shuffle(order);

        double epoch_loss = 0.0;
        long seen = 0;
        for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(opt.batch)) {
            const size_t end = std::min(order.size(), begin + static_cast<size_t>(opt.batch));
            for (auto& g : acc) g.zero();
            for (size_t k = begin; k < end; ++k) {
                const SequenceEx& ex = ds.train[order[k]];
                BackwardResult r =
                    backward(ex.x, ex.mask, ex.label ? 1.0 : 0.0, opt.weights[1], opt.weights[0],
                             params);
                if (!std::isfinite(r.loss)) {
                    rec.failed = true;
                    rec.failure = "non-finite training loss at epoch " + std::to_string(epoch);
                    rec.checkpoint = {best_params, ds.scaler, best_choice.threshold, config.seed};
                    rec.frozen_threshold = best_choice.threshold;
                    rec.val_precision = best_choice.precision;
                    rec.val_recall = best_choice.recall;
                    rec.floor_met = best_choice.floor_met;
                    return rec;
                }
                epoch_loss += r.loss;
                ++seen;
                for (size_t gi = 0; gi < acc.size(); ++gi)
                    for (size_t e = 0; e < acc[gi].a.size(); ++e)
                        acc[gi].a[e] += r.grads[gi].a[e];
            }
            const double inv = 1.0 / static_cast<double>(end - begin);
            for (auto& g : acc)
                for (double& v : g.a) v *= inv;
            adam_step(params, acc, adam, opt.lr);
        }

        if (!evaluate(epoch, seen ? epoch_loss / static_cast<double>(seen) : 0.0)) return rec;
        if (stale >= opt.patience) break;
    }

    rec.checkpoint = {best_params, ds.scaler, best_choice.threshold, config.seed};
    rec.frozen_threshold = best_choice.threshold;
    rec.val_precision = best_choice.precision;
    rec.val_recall = best_choice.recall;
    rec.floor_met = best_choice.floor_met;
    return rec;
}

GridResult run_experiment_grid(const BuiltDataset& ds, const std::vector<Arch>& archs,
                               const std::vector<int>& cells, int runs, uint64_t base_seed,
                               const TrainOptions& opt) {
    GridResult result;
    for (Arch arch : archs) {
        for (int hidden : cells) {
            GridEntry entry;
            entry.arch = arch;
            entry.cells = hidden;
            for (int k = 0; k < runs; ++k) {
                ModelConfig config;
                config.architecture = arch;
                config.hidden_cells = hidden;
                config.seq_len = ds.seq_len;
                config.seed = base_seed + static_cast<uint64_t>(k);
                entry.runs.push_back(train_model(ds, config, opt));
            }
            Objective best;
            for (size_t i = 0; i < entry.runs.size(); ++i) {
                const TrainRunRecord& r = entry.runs[i];
                if (r.failed) continue;
                Objective obj{r.floor_met, r.val_precision, r.val_recall};
                if (entry.selected < 0 || obj.better_than(best)) {
                    best = obj;
                    entry.selected = static_cast<int>(i);
                }
            }
            result.entries.push_back(std::move(entry));
        }
    }
    return result;
}

void write_run_outputs(const TrainRunRecord& rec, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    if (!rec.failed) save_checkpoint(rec.checkpoint, (base / "checkpoint.json").string());

    std::ofstream out(base / "history.csv", std::ios::binary);
    write_csv_row(out, {"epoch", "train_loss", "val_loss", "val_recall", "val_precision"});
    for (const auto& e : rec.history) {
        write_csv_row(out, {std::to_string(e.epoch), format_double(e.train_loss),
                            format_double(e.val_loss), format_double(e.val_recall),
                            format_double(e.val_precision)});
    }
}

SplitMetrics evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<SequenceEx>& split) {
    const auto scores = score_split(split, ckpt.params);
    return evaluate_split(labels_of(split), scores, ckpt.threshold);
}

}
