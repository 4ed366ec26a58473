#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpi/features.hpp"
#include "dpi/linalg.hpp"

namespace dpi {

enum class Arch { lstm, gru, attention_lstm };

std::string arch_name(Arch a);
Arch arch_from_string(const std::string& s);  // accepts "attention" as an alias

struct ModelConfig {
    Arch architecture = Arch::lstm;
    int hidden_cells = 8;
    int input_dim = kFeatureCount;
    int seq_len = kDefaultSeqLen;
    uint64_t seed = 0;
};

struct AllMaskedError : std::runtime_error {
    AllMaskedError() : std::runtime_error("attention pooling needs at least one unmasked step") {}
};

// Named tensors in a fixed per-architecture order (the checkpoint and the
// optimizer both rely on the ordering).
//   lstm:            W_i U_i b_i  W_f U_f b_f  W_g U_g b_g  W_o U_o b_o  head_w head_b
//   gru:             W_z U_z b_z  W_r U_r b_r  W_n U_n b_n  head_w head_b
//   attention_lstm:  lstm cell tensors, att_w, att_v, head_w, head_b
struct Parameters {
    ModelConfig config;
    std::vector<std::string> names;
    std::vector<Mat> tensors;

    int index_of(const std::string& name) const;  // -1 if absent
    const Mat& tensor(const std::string& name) const;
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out)), fan_in = cols,
// fan_out = rows), zero biases except the LSTM forget-gate bias at 1.
Parameters init_parameters(const ModelConfig& config, uint64_t seed);

long parameter_count(const Parameters& p);

// Single-step cell evaluations, exposed for reference-oracle tests.
struct LstmStep {
    std::vector<double> i, f, g, o, c, h;
};
LstmStep lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                   const std::vector<double>& c_prev, const Parameters& p);

struct GruStep {
    std::vector<double> z, r, n, hu, h;  // hu = U_n * h_prev, kept for backprop
};
GruStep gru_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                 const Parameters& p);

struct AttentionPoolResult {
    std::vector<double> weights;  // zero on masked steps, sums to 1
    std::vector<double> context;
};
AttentionPoolResult attention_pool(const Mat& states, const std::vector<uint8_t>& mask,
                                   const Parameters& p);

// Everything backward() needs from the forward pass.
struct ForwardTrace {
    Mat h;  // (T+1) x H, row 0 is the initial state
    Mat c;  // (T+1) x H, lstm family only
    Mat gi, gf, gg, go;      // lstm gates, T x H
    Mat gz, gr, gn, hu;      // gru gates, T x H
    Mat att_u;               // tanh(att_w * h_t), T x H
    std::vector<double> att_weight;
    std::vector<double> context;
    double logit = 0.0;
    double prob = 0.5;
    int last_unmasked = -1;
};

// Masked steps copy the recurrent state through untouched, which makes the
// output exactly invariant to left padding. lstm/gru read the head off the
// final state; attention_lstm pools every unmasked state.
double forward(const Mat& x, const std::vector<uint8_t>& mask, const Parameters& p,
               ForwardTrace* trace = nullptr);

// loss = -[w_pos*y*ln p + w_neg*(1-y)*ln(1-p)], p clamped to [1e-7, 1-1e-7].
double weighted_bce(double y, double p, double w_pos, double w_neg);

struct BackwardResult {
    double probability = 0.5;
    double loss = 0.0;
    std::vector<Mat> grads;  // aligned with Parameters::tensors
};

// Exact gradients of weighted_bce(forward(x)) for every parameter.
BackwardResult backward(const Mat& x, const std::vector<uint8_t>& mask, double y,
                        double w_pos, double w_neg, const Parameters& p);

struct AdamState {
    long t = 0;
    std::vector<Mat> m, v;
};
AdamState init_adam(const Parameters& p);
void adam_step(Parameters& p, const std::vector<Mat>& grads, AdamState& state,
               double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct Checkpoint {
    Parameters params;
    Scaler scaler;
    double threshold = 0.5;
    uint64_t seed = 0;
};

// One JSON document; save(load(f)) is byte-identical.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}
