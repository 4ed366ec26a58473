#include "dpi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpi {

Confusion confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                    double threshold) {
    if (labels.size() != scores.size()) throw LengthMismatchError();
    Confusion c;
    for (size_t i = 0; i < labels.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i]) {
            (pred ? c.tp : c.fn) += 1;
        } else {
            (pred ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

double precision(const Confusion& c) {
    const long denom = c.tp + c.fp;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double recall(const Confusion& c) {
    const long denom = c.tp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double f1_from_rates(double precision, double recall) {
    const double denom = precision + recall;
    return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

double f1(const Confusion& c) { return f1_from_rates(precision(c), recall(c)); }

double roc_auc(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw LengthMismatchError();

    // positives/negatives per distinct score, descending
    std::map<double, std::pair<long, long>, std::greater<>> groups;
    long n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        auto& g = groups[scores[i]];
        if (labels[i]) {
            ++g.first;
            ++n_pos;
        } else {
            ++g.second;
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0) throw OneClassOnlyError();

    double area = 0.0;
    long tp = 0, fp = 0;
    double tpr_prev = 0.0, fpr_prev = 0.0;
    for (const auto& [score, counts] : groups) {
        tp += counts.first;
        fp += counts.second;
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        area += (fpr - fpr_prev) * (tpr + tpr_prev) * 0.5;
        tpr_prev = tpr;
        fpr_prev = fpr;
    }
    return area;
}

SplitMetrics evaluate_split(const std::vector<uint8_t>& labels,
                            const std::vector<double>& scores, double threshold) {
    SplitMetrics m;
    m.conf = confusion(labels, scores, threshold);
    m.precision = precision(m.conf);
    m.recall = recall(m.conf);
    m.f1 = f1(m.conf);
    m.auc = roc_auc(labels, scores);
    m.threshold = threshold;
    return m;
}

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

json split_to_json(const SplitMetrics& m) {
    return json{
        {"confusion", {{"tp", m.conf.tp}, {"fp", m.conf.fp}, {"fn", m.conf.fn}, {"tn", m.conf.tn}}},
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"auc", m.auc},
        {"threshold", m.threshold},
    };
}

SplitMetrics split_from_json(const json& j) {
    SplitMetrics m;
    m.conf.tp = j.at("confusion").at("tp").get<long>();
    m.conf.fp = j.at("confusion").at("fp").get<long>();
    m.conf.fn = j.at("confusion").at("fn").get<long>();
    m.conf.tn = j.at("confusion").at("tn").get<long>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.auc = j.at("auc").get<double>();
    m.threshold = j.at("threshold").get<double>();
    return m;
}

// Bold every cell that attains the column maximum.
std::string cell(double v, double col_max) {
    std::string s = fmt3(v);
    if (v == col_max) return "**" + s + "**";
    return s;
}

}  // namespace

void render_report(const std::vector<ConfigReport>& reports, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path base(out_dir);

    json summary = json::array();
    for (const auto& r : reports) {
        summary.push_back(json{
            {"model", r.model},
            {"cells", r.cells},
            {"seed", r.seed},
            {"validation", split_to_json(r.validation)},
            {"test", split_to_json(r.test)},
        });
    }
    {
        std::ofstream out(base / "summary.json", std::ios::binary);
        out << summary.dump(2) << '\n';
    }

    double max_rec = 0.0, max_prec = 0.0, max_f1 = 0.0, max_auc = 0.0;
    for (const auto& r : reports) {
        max_rec = std::max(max_rec, r.test.recall);
        max_prec = std::max(max_prec, r.test.precision);
        max_f1 = std::max(max_f1, r.test.f1);
        max_auc = std::max(max_auc, r.test.auc);
    }

    {
        std::ofstream out(base / "table2.md", std::ios::binary);
        out << "| Model | Cells | Recall | Precision | F1 | AUC |\n";
        out << "| --- | --- | --- | --- | --- | --- |\n";
        for (const auto& r : reports) {
            out << "| " << r.model << " | " << r.cells << " | " << cell(r.test.recall, max_rec)
                << " | " << cell(r.test.precision, max_prec) << " | " << cell(r.test.f1, max_f1)
                << " | " << cell(r.test.auc, max_auc) << " |\n";
        }
    }

    {
        std::ofstream out(base / "table3.md", std::ios::binary);
        out << "| Model | Cells | Recall (T) | Recall (V) | Precision (T) | Precision (V) |\n";
        out << "| --- | --- | --- | --- | --- | --- |\n";
        for (const auto& r : reports) {
            out << "| " << r.model << " | " << r.cells << " | " << fmt3(r.test.recall) << " | "
                << fmt3(r.validation.recall) << " | " << fmt3(r.test.precision) << " | "
                << fmt3(r.validation.precision) << " |\n";
        }
    }

    for (const auto& r : reports) {
        json conf = {
            {"model", r.model},
            {"cells", r.cells},
            {"threshold", r.test.threshold},
            {"test", {{"tp", r.test.conf.tp},
                      {"fp", r.test.conf.fp},
                      {"fn", r.test.conf.fn},
                      {"tn", r.test.conf.tn}}},
        };
        std::ofstream out(base / ("confusion_" + r.model + "_" + std::to_string(r.cells) + ".json"),
                          std::ios::binary);
        out << conf.dump(2) << '\n';
    }
}

std::vector<ConfigReport> reports_from_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    std::vector<ConfigReport> out;
    for (const auto& e : j) {
        ConfigReport r;
        r.model = e.at("model").get<std::string>();
        r.cells = e.at("cells").get<int>();
        r.seed = e.at("seed").get<uint64_t>();
        r.validation = split_from_json(e.at("validation"));
        r.test = split_from_json(e.at("test"));
        out.push_back(std::move(r));
    }
    return out;
}

}
