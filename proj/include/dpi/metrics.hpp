#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpi {

struct LengthMismatchError : std::runtime_error {
    LengthMismatchError() : std::runtime_error("labels and scores differ in length") {}
};
struct OneClassOnlyError : std::runtime_error {
    OneClassOnlyError() : std::runtime_error("AUC needs at least one positive and one negative") {}
};
struct NoPositivesError : std::runtime_error {
    NoPositivesError() : std::runtime_error("at least one positive label is required") {}
};

struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
};

// Predict positive iff score >= threshold.
Confusion confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                    double threshold);

// Zero-denominator convention: precision and recall are 0, not NaN.
double precision(const Confusion& c);
double recall(const Confusion& c);
double f1(const Confusion& c);
double f1_from_rates(double precision, double recall);

// Trapezoidal area under the ROC curve; tied scores form one sweep group,
// which matches the rank statistic with ties counted 1/2.
double roc_auc(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

struct SplitMetrics {
    Confusion conf;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double threshold = 0.5;
};

SplitMetrics evaluate_split(const std::vector<uint8_t>& labels,
                            const std::vector<double>& scores, double threshold);

struct ConfigReport {
    std::string model;
    int cells = 0;
    uint64_t seed = 0;
    SplitMetrics validation;
    SplitMetrics test;
};

// Writes summary.json, table2.md (test metrics, best-per-column bolded),
// table3.md (test vs validation), confusion_<model>_<cells>.json.
void render_report(const std::vector<ConfigReport>& reports, const std::string& out_dir);

// Reads a summary.json back; render_report(reports_from_json(p)) reproduces
// the tables byte for byte.
std::vector<ConfigReport> reports_from_json(const std::string& path);

}
