#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "dpi/csv.hpp"
#include "dpi/dataset_io.hpp"
#include "dpi/ingest.hpp"
#include "dpi/manifest.hpp"
#include "dpi/metrics.hpp"
#include "dpi/neural.hpp"
#include "dpi/pipeline.hpp"
#include "dpi/synth.hpp"
#include "dpi/train.hpp"
#include "dpi/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpi;

namespace {

bool g_json_errors = false;

int fail(int code, const std::string& message) {
    if (g_json_errors)
        std::cerr << json{{"error", message}, {"code", code}}.dump() << '\n';
    else
        std::cerr << "error: " << message << '\n';
    return code;
}

std::optional<std::vector<double>> parse_doubles(const std::string& s, size_t n) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        try {
            size_t used = 0;
            out.push_back(std::stod(s.substr(pos, comma - pos), &used));
            if (used != comma - pos) return std::nullopt;
        } catch (const std::exception&) {
            return std::nullopt;
        }
        pos = comma + 1;
    }
    if (out.size() != n) return std::nullopt;
    return out;
}

std::vector<std::string> csv_inputs(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            files.push_back(e.path().string());
    return files;
}

struct SynthArgs {
    long plays = 500;
    double dpi_rate = 0.0146;
    uint64_t seed = 1;
    int players = 5;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    if (a.plays <= 0) return fail(1, "--plays must be positive");
    if (a.dpi_rate <= 0.0 || a.dpi_rate >= 1.0) return fail(1, "--dpi-rate must lie in (0, 1)");
    if (a.players < 2 || a.players > 11) return fail(1, "--players must lie in [2, 11]");

    SynthConfig config;
    config.n_plays = a.plays;
    config.dpi_rate = a.dpi_rate;
    config.seed = a.seed;
    config.players_per_side = a.players;
    const SynthSummary summary = generate_season(config, a.out);

    write_run_manifest(a.out, "synth", a.seed,
                       json{{"plays", a.plays},
                            {"dpi_rate", a.dpi_rate},
                            {"seed", a.seed},
                            {"players_per_side", a.players},
                            {"out", a.out}},
                       {});
    std::cout << "wrote " << summary.n_plays << " plays (" << summary.n_dpi << " DPI) across "
              << summary.n_games << " games to " << a.out << '\n';
    return 0;
}

struct PreprocessArgs {
    std::string data_dir;
    std::string out;
    double threshold = 0.0;
    bool threshold_set = false;
    uint64_t seed = 42;
    std::string splits = "0.56,0.14,0.30";
};

int run_preprocess_cmd(const PreprocessArgs& a) {
    std::string data_dir = a.data_dir;
    if (data_dir.empty())
        if (const char* env = std::getenv("DPI_DATA_DIR")) data_dir = env;
    if (data_dir.empty())
        return fail(1, "no data directory: pass --data-dir or set DPI_DATA_DIR");
    if (!fs::is_directory(data_dir))
        return fail(1, "data directory does not exist: " + data_dir);

    const auto fractions = parse_doubles(a.splits, 3);
    if (!fractions) return fail(1, "--splits expects three comma-separated numbers");
    double sum = 0.0;
    for (double f : *fractions) {
        if (f <= 0.0) return fail(1, "--splits fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-6) return fail(1, "--splits fractions must sum to 1");
    if (a.threshold_set && a.threshold <= 0.0) return fail(1, "--threshold must be positive");

    BuildOptions opt;
    opt.seed = a.seed;
    opt.fractions = {(*fractions)[0], (*fractions)[1], (*fractions)[2]};
    if (a.threshold_set) opt.threshold_override = a.threshold;

    const RawDataset raw = load_dataset(data_dir);
    BuildReport report;
    const BuiltDataset ds = build_dataset(raw, opt, report);
    write_dataset(ds, a.out);
    {
        std::ofstream rep(fs::path(a.out) / "build_report.json", std::ios::binary);
        json j;
        j["load"] = json::parse(raw.report.to_json());
        j["build"] = json::parse(report.to_json());
        rep << j.dump(2) << '\n';
    }

    json params{{"data_dir", data_dir},
                {"out", a.out},
                {"seed", a.seed},
                {"splits", a.splits},
                {"proximity_threshold", ds.proximity_threshold},
                {"threshold_overridden", ds.threshold_overridden}};
    write_run_manifest(a.out, "preprocess", a.seed, params, csv_inputs(data_dir));

    std::cout << "dataset: " << ds.train.size() << " train / " << ds.validation.size()
              << " validation / " << ds.test.size() << " test sequences (threshold "
              << format_double(ds.proximity_threshold) << ") in " << a.out << '\n';
    return 0;
}

struct TrainArgs {
    std::string dataset;
    std::string out;
    std::string model = "lstm";
    int cells = 64;
    int runs = 5;
    uint64_t seed = 42;
    int epochs = 100;
    int batch = 64;
    double lr = 1e-3;
    double recall_floor = 0.8;
    std::string weights;
};

int check_common_train_flags(const TrainArgs& a) {
    if (a.runs <= 0) return fail(1, "--runs must be positive");
    if (a.epochs < 0) return fail(1, "--epochs must be non-negative");
    if (a.batch <= 0) return fail(1, "--batch must be positive");
    if (a.lr <= 0.0) return fail(1, "--lr must be positive");
    if (a.recall_floor < 0.0 || a.recall_floor > 1.0)
        return fail(1, "--recall-floor must lie in [0, 1]");
    if (!fs::is_directory(a.dataset)) return fail(1, "dataset directory does not exist: " + a.dataset);
    return 0;
}

TrainOptions options_from(const TrainArgs& a, const BuiltDataset& ds,
                          const std::optional<std::vector<double>>& weights) {
    TrainOptions opt;
    opt.epochs = a.epochs;
    opt.batch = a.batch;
    opt.lr = a.lr;
    opt.recall_floor = a.recall_floor;
    opt.weights = weights ? std::array<double, 2>{(*weights)[0], (*weights)[1]}
                          : ds.weights_effective;
    return opt;
}

json run_record_json(const TrainRunRecord& r) {
    return json{{"seed", r.seed},
                {"failed", r.failed},
                {"failure", r.failure},
                {"best_epoch", r.best_epoch},
                {"epochs_run", r.history.empty() ? 0 : r.history.back().epoch},
                {"frozen_threshold", r.frozen_threshold},
                {"val_precision", r.val_precision},
                {"val_recall", r.val_recall},
                {"floor_met", r.floor_met}};
}

std::string config_dir_name(const std::string& model, int cells) {
    return model + "_" + std::to_string(cells);
}

int run_train(const TrainArgs& a) {
    if (a.cells != 8 && a.cells != 64 && a.cells != 128)
        return fail(1, "invalid --cells " + std::to_string(a.cells) +
                           ": allowed values are {8, 64, 128}");
    Arch arch;
    try {
        arch = arch_from_string(a.model);
    } catch (const std::invalid_argument&) {
        return fail(1, "invalid --model '" + a.model + "': allowed values are {lstm, gru, attention}");
    }
    if (int rc = check_common_train_flags(a)) return rc;
    std::optional<std::vector<double>> weights;
    if (!a.weights.empty()) {
        weights = parse_doubles(a.weights, 2);
        if (!weights) return fail(1, "--weights expects two comma-separated numbers");
        if ((*weights)[0] <= 0.0 || (*weights)[1] <= 0.0)
            return fail(1, "--weights must be positive");
    }

    const BuiltDataset ds = read_dataset(a.dataset);
    const TrainOptions opt = options_from(a, ds, weights);

    const std::string cfg_name = config_dir_name(arch_name(arch), a.cells);
    std::vector<TrainRunRecord> records;
    int selected = -1;
    for (int k = 0; k < a.runs; ++k) {
        ModelConfig config;
        config.architecture = arch;
        config.hidden_cells = a.cells;
        config.seq_len = ds.seq_len;
        config.seed = a.seed + static_cast<uint64_t>(k);
        TrainRunRecord rec = train_model(ds, config, opt);
        write_run_outputs(rec, (fs::path(a.out) / cfg_name / ("seed" + std::to_string(config.seed)))
                                   .string());
        records.push_back(std::move(rec));
    }
    for (size_t i = 0; i < records.size(); ++i) {
        const TrainRunRecord& r = records[i];
        if (r.failed) continue;
        if (selected < 0) {
            selected = static_cast<int>(i);
            continue;
        }
        const TrainRunRecord& b = records[static_cast<size_t>(selected)];
        const auto key = [](const TrainRunRecord& x) {
            return std::make_tuple(x.floor_met, x.val_precision, x.val_recall);
        };
        if (key(r) > key(b)) selected = static_cast<int>(i);
    }

    json summary;
    summary["model"] = arch_name(arch);
    summary["cells"] = a.cells;
    summary["weights"] = opt.weights;
    summary["runs"] = json::array();
    for (const auto& r : records) summary["runs"].push_back(run_record_json(r));
    summary["selected_seed"] = selected < 0 ? json() : json(records[static_cast<size_t>(selected)].seed);
    fs::create_directories(a.out);
    {
        std::ofstream out(fs::path(a.out) / "train_summary.json", std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    if (selected >= 0)
        save_checkpoint(records[static_cast<size_t>(selected)].checkpoint,
                        (fs::path(a.out) / "checkpoint.json").string());

    json params{{"dataset", a.dataset}, {"out", a.out},       {"model", a.model},
                {"cells", a.cells},     {"runs", a.runs},     {"seed", a.seed},
                {"epochs", a.epochs},   {"batch", a.batch},   {"lr", a.lr},
                {"recall_floor", a.recall_floor},
                {"weights", json(opt.weights)}};
    write_run_manifest(a.out, "train", a.seed, params, {a.dataset});

    if (selected < 0) return fail(2, "every training run diverged");
    const TrainRunRecord& best = records[static_cast<size_t>(selected)];
    std::cout << cfg_name << ": selected seed " << best.seed << " (val precision "
              << format_double(best.val_precision) << ", recall "
              << format_double(best.val_recall) << ", threshold "
              << format_double(best.frozen_threshold) << ")\n";
    return 0;
}

int run_grid(const TrainArgs& a) {
    if (int rc = check_common_train_flags(a)) return rc;
    std::optional<std::vector<double>> weights;
    if (!a.weights.empty()) {
        weights = parse_doubles(a.weights, 2);
        if (!weights) return fail(1, "--weights expects two comma-separated numbers");
    }

    const BuiltDataset ds = read_dataset(a.dataset);
    const TrainOptions opt = options_from(a, ds, weights);

    const std::vector<Arch> archs = {Arch::lstm, Arch::gru, Arch::attention_lstm};
    const std::vector<int> cells = {8, 64, 128};
    const GridResult grid = run_experiment_grid(ds, archs, cells, a.runs, a.seed, opt);

    json summary = json::array();
    std::vector<ConfigReport> reports;
    bool all_selected = true;
    for (const auto& entry : grid.entries) {
        const std::string cfg_name = config_dir_name(arch_name(entry.arch), entry.cells);
        json entry_json;
        entry_json["model"] = arch_name(entry.arch);
        entry_json["cells"] = entry.cells;
        entry_json["runs"] = json::array();
        for (const auto& r : entry.runs) {
            write_run_outputs(r, (fs::path(a.out) / "runs" / cfg_name /
                                  ("seed" + std::to_string(r.seed)))
                                     .string());
            entry_json["runs"].push_back(run_record_json(r));
        }
        if (entry.selected < 0) {
            all_selected = false;
            entry_json["selected_seed"] = json();
        } else {
            const TrainRunRecord& best = entry.runs[static_cast<size_t>(entry.selected)];
            entry_json["selected_seed"] = best.seed;
            ConfigReport rep;
            rep.model = arch_name(entry.arch);
            rep.cells = entry.cells;
            rep.seed = best.seed;
            rep.validation = evaluate_checkpoint(best.checkpoint, ds.validation);
            rep.test = evaluate_checkpoint(best.checkpoint, ds.test);
            reports.push_back(std::move(rep));
        }
        summary.push_back(std::move(entry_json));
    }
    render_report(reports, (fs::path(a.out) / "reports").string());
    fs::create_directories(a.out);
    {
        std::ofstream out(fs::path(a.out) / "grid_summary.json", std::ios::binary);
        out << summary.dump(2) << '\n';
    }

    json params{{"dataset", a.dataset}, {"out", a.out},     {"runs", a.runs},
                {"seed", a.seed},       {"epochs", a.epochs}, {"batch", a.batch},
                {"lr", a.lr},           {"recall_floor", a.recall_floor},
                {"weights", json(opt.weights)}};
    write_run_manifest(a.out, "grid", a.seed, params, {a.dataset});

    std::cout << "grid: " << grid.entries.size() << " configs x " << a.runs << " runs; reports in "
              << (fs::path(a.out) / "reports").string() << '\n';
    if (!all_selected) return fail(2, "at least one configuration had every run diverge");
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string dataset;
    std::string split = "test";
    std::string out;
};

int run_eval(const EvalArgs& a) {
    if (a.split != "validation" && a.split != "test")
        return fail(1, "invalid --split '" + a.split + "': allowed values are {validation, test}");
    if (!fs::is_regular_file(a.checkpoint))
        return fail(1, "checkpoint does not exist: " + a.checkpoint);
    if (!fs::is_directory(a.dataset)) return fail(1, "dataset directory does not exist: " + a.dataset);

    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const BuiltDataset ds = read_dataset(a.dataset);
    const auto& split = a.split == "validation" ? ds.validation : ds.test;
    const SplitMetrics m = evaluate_checkpoint(ckpt, split);

    fs::create_directories(a.out);
    json j{{"model", arch_name(ckpt.params.config.architecture)},
           {"cells", ckpt.params.config.hidden_cells},
           {"split", a.split},
           {"threshold", m.threshold},
           {"confusion",
            {{"tp", m.conf.tp}, {"fp", m.conf.fp}, {"fn", m.conf.fn}, {"tn", m.conf.tn}}},
           {"precision", m.precision},
           {"recall", m.recall},
           {"f1", m.f1},
           {"auc", m.auc}};
    {
        std::ofstream out(fs::path(a.out) / "metrics.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }
    write_run_manifest(a.out, "eval", ckpt.seed,
                       json{{"checkpoint", a.checkpoint},
                            {"dataset", a.dataset},
                            {"split", a.split},
                            {"out", a.out}},
                       {a.checkpoint, a.dataset});

    std::cout << a.split << ": recall " << format_double(m.recall) << ", precision "
              << format_double(m.precision) << ", f1 " << format_double(m.f1) << ", auc "
              << format_double(m.auc) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DPI prediction pipeline: synthetic data, preprocessing, training, evaluation"};
    app.set_version_flag("--version", std::string(kVersion));
    app.add_flag("--json", g_json_errors, "emit machine-readable errors on stderr");
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a schema-identical synthetic season");
    synth_cmd->add_option("--plays", synth_args.plays, "number of plays")->capture_default_str();
    synth_cmd->add_option("--dpi-rate", synth_args.dpi_rate, "fraction of DPI plays")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_args.seed, "generator seed")->capture_default_str();
    synth_cmd->add_option("--players", synth_args.players, "players per side (2..11)")
        ->capture_default_str();
    synth_cmd->add_option("--out", synth_args.out, "output directory")->required();

    PreprocessArgs pre_args;
    auto* pre_cmd =
        app.add_subcommand("preprocess", "ingest raw CSVs and build the model-ready dataset");
    pre_cmd->add_option("--data-dir", pre_args.data_dir,
                        "directory with games.csv, plays.csv, week*.csv (default: $DPI_DATA_DIR)");
    pre_cmd->add_option("--out", pre_args.out, "output directory")->required();
    auto* thr_opt = pre_cmd->add_option(
        "--threshold", pre_args.threshold,
        "proximity threshold in yards (default: the 0.90 quantile of DPI duel distances)");
    pre_cmd->add_option("--seed", pre_args.seed, "split shuffle seed")->capture_default_str();
    pre_cmd->add_option("--splits", pre_args.splits, "train,validation,test fractions")
        ->capture_default_str();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train one architecture/size configuration");
    train_cmd->add_option("--dataset", train_args.dataset, "dataset directory from preprocess")
        ->required();
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--model", train_args.model, "architecture: lstm, gru or attention")
        ->capture_default_str();
    train_cmd->add_option("--cells", train_args.cells, "hidden cells: 8, 64 or 128")
        ->capture_default_str();
    train_cmd->add_option("--runs", train_args.runs, "seeded runs per configuration")
        ->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed, "base seed (run k uses seed+k)")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_args.batch, "mini-batch size")->capture_default_str();
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--recall-floor", train_args.recall_floor,
                          "validation recall floor for threshold selection")
        ->capture_default_str();
    train_cmd->add_option("--weights", train_args.weights,
                          "class weights w_neg,w_pos (default: computed from training counts)");

    TrainArgs grid_args;
    auto* grid_cmd =
        app.add_subcommand("grid", "train every architecture at 8, 64 and 128 cells");
    grid_cmd->add_option("--dataset", grid_args.dataset, "dataset directory from preprocess")
        ->required();
    grid_cmd->add_option("--out", grid_args.out, "output directory")->required();
    grid_cmd->add_option("--runs", grid_args.runs, "seeded runs per configuration")
        ->capture_default_str();
    grid_cmd->add_option("--seed", grid_args.seed, "base seed (run k uses seed+k)")
        ->capture_default_str();
    grid_cmd->add_option("--epochs", grid_args.epochs, "training epochs")->capture_default_str();
    grid_cmd->add_option("--batch", grid_args.batch, "mini-batch size")->capture_default_str();
    grid_cmd->add_option("--lr", grid_args.lr, "Adam learning rate")->capture_default_str();
    grid_cmd->add_option("--recall-floor", grid_args.recall_floor,
                         "validation recall floor for threshold selection")
        ->capture_default_str();
    grid_cmd->add_option("--weights", grid_args.weights,
                         "class weights w_neg,w_pos (default: computed from training counts)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.json from train/grid")
        ->required();
    eval_cmd->add_option("--dataset", eval_args.dataset, "dataset directory from preprocess")
        ->required();
    eval_cmd->add_option("--split", eval_args.split, "validation or test")->capture_default_str();
    eval_cmd->add_option("--out", eval_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail(1, e.what());
    }

    try {
        if (app.got_subcommand(synth_cmd)) return run_synth(synth_args);
        if (app.got_subcommand(pre_cmd)) {
            pre_args.threshold_set = thr_opt->count() > 0;
            return run_preprocess_cmd(pre_args);
        }
        if (app.got_subcommand(train_cmd)) return run_train(train_args);
        if (app.got_subcommand(grid_cmd)) return run_grid(grid_args);
        if (app.got_subcommand(eval_cmd)) return run_eval(eval_args);
    } catch (const MissingFileError& e) {
        return fail(1, e.what());
    } catch (const MissingColumnError& e) {
        return fail(1, e.what());
    } catch (const std::exception& e) {
        return fail(2, e.what());
    }
    return fail(1, "no command given");
}
