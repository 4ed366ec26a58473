#include "dpi/dataset_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dpi/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpi {

namespace {

double parse_double_exact(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DatasetFormatError("bad float '" + s + "' in " + where);
    return v;
}

long parse_long_exact(const std::string& s, const std::string& where) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DatasetFormatError("bad integer '" + s + "' in " + where);
    return v;
}

void write_split(const std::vector<SequenceEx>& split, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetFormatError("cannot open " + path.string() + " for writing");

    std::vector<std::string> row;
    row.assign({"game_id", "play_id", "step"});
    for (const auto& name : feature_names()) row.push_back(name);
    row.push_back("mask");
    row.push_back("label");
    write_csv_row(out, row);

    for (const auto& seq : split) {
        for (int t = 0; t < seq.x.rows; ++t) {
            row.clear();
            row.push_back(std::to_string(seq.game_id));
            row.push_back(std::to_string(seq.play_id));
            row.push_back(std::to_string(t));
            for (int f = 0; f < seq.x.cols; ++f) row.push_back(format_double(seq.x(t, f)));
            row.push_back(seq.mask[static_cast<size_t>(t)] ? "1" : "0");
            row.push_back(seq.label ? "1" : "0");
            write_csv_row(out, row);
        }
    }
    if (!out) throw DatasetFormatError("write failed for " + path.string());
}

std::vector<SequenceEx> read_split(const fs::path& path, int seq_len) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetFormatError("cannot open " + path.string());
    CsvReader reader(in);

    const auto& names = feature_names();
    const int col_game = reader.column("game_id");
    const int col_play = reader.column("play_id");
    const int col_step = reader.column("step");
    const int col_mask = reader.column("mask");
    const int col_label = reader.column("label");
    std::vector<int> col_feat(names.size());
    for (size_t i = 0; i < names.size(); ++i) col_feat[i] = reader.column(names[i]);
    if (col_game < 0 || col_play < 0 || col_step < 0 || col_mask < 0 || col_label < 0)
        throw DatasetFormatError("missing column in " + path.string());
    for (int c : col_feat)
        if (c < 0) throw DatasetFormatError("missing feature column in " + path.string());

    std::vector<SequenceEx> out;
    std::vector<std::string> row;
    size_t line_no = 0;
    const std::string where = path.filename().string();
    while (reader.next(row, line_no)) {
        long game_id = parse_long_exact(row.at(col_game), where);
        long play_id = parse_long_exact(row.at(col_play), where);
        long step = parse_long_exact(row.at(col_step), where);

        if (out.empty() || out.back().game_id != game_id || out.back().play_id != play_id) {
            if (step != 0)
                throw DatasetFormatError("sequence does not start at step 0 in " + where);
            SequenceEx seq;
            seq.game_id = game_id;
            seq.play_id = play_id;
            seq.x = Mat(seq_len, kFeatureCount);
            seq.mask.assign(static_cast<size_t>(seq_len), 0);
            out.push_back(std::move(seq));
        }
        SequenceEx& seq = out.back();
        if (step < 0 || step >= seq_len)
            throw DatasetFormatError("step out of range in " + where);
        for (int f = 0; f < kFeatureCount; ++f)
            seq.x(static_cast<int>(step), f) = parse_double_exact(row.at(col_feat[f]), where);
        seq.mask[static_cast<size_t>(step)] =
            static_cast<uint8_t>(parse_long_exact(row.at(col_mask), where) != 0);
        seq.label = parse_long_exact(row.at(col_label), where) != 0;
    }
    return out;
}

}  // namespace

void write_dataset(const BuiltDataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    write_split(ds.train, base / "train.csv");
    write_split(ds.validation, base / "validation.csv");
    write_split(ds.test, base / "test.csv");

    json manifest;
    manifest["seq_len"] = ds.seq_len;
    manifest["seed"] = ds.seed;
    manifest["fractions"] = ds.fractions;
    manifest["proximity_threshold"] = ds.proximity_threshold;
    manifest["threshold_overridden"] = ds.threshold_overridden;
    manifest["scaler"]["mean"] = ds.scaler.mean;
    manifest["scaler"]["stddev"] = ds.scaler.stddev;
    manifest["weights_computed"] = {
        {"n_inst", ds.weights_computed.n_inst},
        {"n_classes", ds.weights_computed.n_classes},
        {"n_inst_class", ds.weights_computed.n_inst_class},
        {"w_class", ds.weights_computed.w_class},
    };
    manifest["weights_effective"] = ds.weights_effective;

    std::ofstream out(base / "dataset_manifest.json", std::ios::binary);
    if (!out) throw DatasetFormatError("cannot write dataset_manifest.json");
    out << manifest.dump(2) << '\n';
}

BuiltDataset read_dataset(const std::string& dir) {
    const fs::path base(dir);
    std::ifstream in(base / "dataset_manifest.json", std::ios::binary);
    if (!in) throw DatasetFormatError("missing dataset_manifest.json in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DatasetFormatError(std::string("bad dataset_manifest.json: ") + e.what());
    }

    BuiltDataset ds;
    try {
        ds.seq_len = manifest.at("seq_len").get<int>();
        ds.seed = manifest.at("seed").get<uint64_t>();
        auto fr = manifest.at("fractions");
        for (int i = 0; i < 3; ++i) ds.fractions[i] = fr.at(i).get<double>();
        ds.proximity_threshold = manifest.at("proximity_threshold").get<double>();
        ds.threshold_overridden = manifest.at("threshold_overridden").get<bool>();
        for (int f = 0; f < kFeatureCount; ++f) {
            ds.scaler.mean[f] = manifest.at("scaler").at("mean").at(f).get<double>();
            ds.scaler.stddev[f] = manifest.at("scaler").at("stddev").at(f).get<double>();
        }
        const auto& wc = manifest.at("weights_computed");
        ds.weights_computed.n_inst = wc.at("n_inst").get<long>();
        ds.weights_computed.n_classes = wc.at("n_classes").get<int>();
        ds.weights_computed.n_inst_class = wc.at("n_inst_class").get<std::vector<long>>();
        ds.weights_computed.w_class = wc.at("w_class").get<std::vector<double>>();
        auto we = manifest.at("weights_effective");
        for (int i = 0; i < 2; ++i) ds.weights_effective[i] = we.at(i).get<double>();
    } catch (const json::exception& e) {
        throw DatasetFormatError(std::string("bad dataset_manifest.json: ") + e.what());
    }

    ds.train = read_split(base / "train.csv", ds.seq_len);
    ds.validation = read_split(base / "validation.csv", ds.seq_len);
    ds.test = read_split(base / "test.csv", ds.seq_len);
    return ds;
}

}
