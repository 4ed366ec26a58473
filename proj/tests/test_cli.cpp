#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dpi/manifest.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& work_root() {
    static const fs::path root = [] {
        fs::path r = fs::temp_directory_path() / "dpi_cli_suite";
        fs::remove_all(r);
        fs::create_directories(r);
        return r;
    }();
    return root;
}

CliResult run_cli(const std::string& args) {
    static int call = 0;
    const fs::path out = work_root() / ("stdout." + std::to_string(call));
    const fs::path err = work_root() / ("stderr." + std::to_string(call));
    ++call;
    const std::string cmd =
        std::string(DPI_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// one chain shared by the later cases
const fs::path& raw_dir() { static fs::path p = work_root() / "raw"; return p; }
const fs::path& ds_dir() { static fs::path p = work_root() / "ds"; return p; }
const fs::path& train_dir() { static fs::path p = work_root() / "train"; return p; }

}  // namespace

TEST_CASE("--help and --version succeed") {
    const CliResult help = run_cli("--help");
    CHECK(help.code == 0);
    for (const char* cmd : {"synth", "preprocess", "train", "grid", "eval", "--json"})
        CHECK(help.out.find(cmd) != std::string::npos);

    const CliResult ver = run_cli("--version");
    CHECK(ver.code == 0);
    CHECK(!ver.out.empty());
}

TEST_CASE("synth, preprocess, train and eval chain end to end") {
    const CliResult synth = run_cli("synth --plays 140 --dpi-rate 0.05 --seed 3 --out " +
                                    raw_dir().string());
    REQUIRE(synth.code == 0);
    for (const char* f : {"games.csv", "plays.csv", "week1.csv", "run_manifest.json"})
        CHECK(fs::exists(raw_dir() / f));

    const CliResult pre = run_cli("preprocess --data-dir " + raw_dir().string() + " --out " +
                                  ds_dir().string() + " --seed 42");
    REQUIRE(pre.code == 0);
    for (const char* f : {"train.csv", "validation.csv", "test.csv", "dataset_manifest.json",
                          "build_report.json", "run_manifest.json"})
        CHECK(fs::exists(ds_dir() / f));

    const CliResult train =
        run_cli("train --dataset " + ds_dir().string() + " --out " + train_dir().string() +
                " --model lstm --cells 8 --runs 1 --seed 5 --epochs 8");
    REQUIRE(train.code == 0);
    CHECK(fs::exists(train_dir() / "checkpoint.json"));
    CHECK(fs::exists(train_dir() / "run_manifest.json"));
    const json summary = json::parse(slurp(train_dir() / "train_summary.json"));
    CHECK(summary.at("runs").is_array());
    CHECK(summary.at("runs").size() == 1);
    CHECK(summary.contains("selected_seed"));

    const fs::path eval_dir = work_root() / "eval";
    const CliResult ev = run_cli("eval --checkpoint " + (train_dir() / "checkpoint.json").string() +
                                 " --dataset " + ds_dir().string() + " --split test --out " +
                                 eval_dir.string());
    REQUIRE(ev.code == 0);
    const json metrics = json::parse(slurp(eval_dir / "metrics.json"));
    for (const char* k : {"model", "cells", "split", "threshold", "confusion", "precision",
                          "recall", "f1", "auc"})
        CHECK(metrics.contains(k));
    for (const char* k : {"tp", "fp", "fn", "tn"}) CHECK(metrics.at("confusion").contains(k));
    CHECK(metrics.at("split") == "test");

    const json manifest = json::parse(slurp(eval_dir / "run_manifest.json"));
    CHECK(manifest.at("command") == "eval");
    CHECK(manifest.at("version").is_string());
    CHECK(manifest.at("parameters").is_object());
    REQUIRE(manifest.at("inputs").is_object());
    CHECK(!manifest.at("inputs").empty());
    for (const auto& [path, hash] : manifest.at("inputs").items()) {
        CHECK(fs::exists(path));
        CHECK(hash.get<std::string>().size() == 16);
    }
}

TEST_CASE("out-of-domain cells fail validation with the allowed set") {
    const CliResult r = run_cli("train --dataset " + ds_dir().string() +
                                " --out " + (work_root() / "bad").string() +
                                " --model lstm --cells 32 --runs 1 --seed 5");
    CHECK(r.code == 1);
    for (const char* v : {"8", "64", "128"}) CHECK(r.err.find(v) != std::string::npos);
}

TEST_CASE("--json turns errors into machine-readable JSON") {
    const CliResult r = run_cli("--json train --dataset " + ds_dir().string() +
                                " --out " + (work_root() / "bad2").string() +
                                " --model lstm --cells 32 --runs 1 --seed 5");
    CHECK(r.code == 1);
    const json err = json::parse(r.err);
    CHECK(err.at("code") == 1);
    CHECK(err.at("error").is_string());
    CHECK(!err.at("error").get<std::string>().empty());
}

TEST_CASE("a garbage checkpoint is a runtime failure") {
    const fs::path bad = work_root() / "bad_checkpoint.json";
    std::ofstream(bad) << "this is not a checkpoint";
    const CliResult r = run_cli("eval --checkpoint " + bad.string() + " --dataset " +
                                ds_dir().string() + " --split test --out " +
                                (work_root() / "eval_bad").string());
    CHECK(r.code == 2);
    CHECK(!r.err.empty());
}

TEST_CASE("missing inputs and unknown commands fail validation") {
    const CliResult missing = run_cli("preprocess --data-dir " +
                                      (work_root() / "nope").string() + " --out " +
                                      (work_root() / "ds_nope").string());
    CHECK(missing.code == 1);

    const CliResult eval_missing =
        run_cli("eval --checkpoint " + (train_dir() / "checkpoint.json").string() +
                " --dataset " + (work_root() / "nope").string() + " --split test --out " +
                (work_root() / "eval_nope").string());
    CHECK(eval_missing.code == 1);

    const CliResult unknown = run_cli("frobnicate");
    CHECK(unknown.code == 1);

    const CliResult bad_split =
        run_cli("eval --checkpoint " + (train_dir() / "checkpoint.json").string() +
                " --dataset " + ds_dir().string() + " --split weekend --out " +
                (work_root() / "eval_ws").string());
    CHECK(bad_split.code == 1);
}

TEST_CASE("preprocess reruns byte-identically") {
    const fs::path ds2 = work_root() / "ds2";
    const CliResult pre = run_cli("preprocess --data-dir " + raw_dir().string() + " --out " +
                                  ds2.string() + " --seed 42");
    REQUIRE(pre.code == 0);
    for (const char* f : {"train.csv", "validation.csv", "test.csv", "dataset_manifest.json",
                          "build_report.json"})
        CHECK(dpi::fnv1a_file((ds_dir() / f).string()) == dpi::fnv1a_file((ds2 / f).string()));
}
