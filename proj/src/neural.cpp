#include "dpi/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "dpi/rng.hpp"

using nlohmann::json;

namespace dpi {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool lstm_family(Arch a) { return a != Arch::gru; }

int head_w_index(const ModelConfig& c) {
    switch (c.architecture) {
        case Arch::lstm: return 12;
        case Arch::gru: return 9;
        case Arch::attention_lstm: return 14;
    }
    return -1;
}
constexpr int kAttW = 12;
constexpr int kAttV = 13;

// y += M * x
void mv_add(double* y, const Mat& m, const double* x) {
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// y += M^T * x
void mtv_add(double* y, const Mat& m, const double* x) {
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) y[c] += xr * row[c];
    }
}

// G += a * b^T
void outer_add(Mat& g, const double* a, const double* b) {
    for (int r = 0; r < g.rows; ++r) {
        double* row = g.row(r);
        const double ar = a[r];
        for (int c = 0; c < g.cols; ++c) row[c] += ar * b[c];
    }
}

Parameters make_parameters(const ModelConfig& config) {
    Parameters p;
    p.config = config;
    const int h = config.hidden_cells;
    const int d = config.input_dim;
    auto add = [&](const std::string& name, int rows, int cols) {
        p.names.push_back(name);
        p.tensors.emplace_back(rows, cols);
    };
    const char* gates = lstm_family(config.architecture) ? "ifgo" : "zrn";
    for (const char* g = gates; *g; ++g) {
        const std::string suffix(1, *g);
        add("W_" + suffix, h, d);
        add("U_" + suffix, h, h);
        add("b_" + suffix, h, 1);
    }
    if (config.architecture == Arch::attention_lstm) {
        add("att_w", h, h);
        add("att_v", 1, h);
    }
    add("head_w", 1, h);
    add("head_b", 1, 1);
    return p;
}

// Shared attention math: scores over rows [row_offset, row_offset+T) of
// states, masked entries excluded, softmax with max subtraction.
void attention_apply(const Mat& states, int row_offset, const std::vector<uint8_t>& mask,
                     const Parameters& p, Mat* u_out, std::vector<double>& weights,
                     std::vector<double>& context) {
    const int t_len = static_cast<int>(mask.size());
    const int h = p.config.hidden_cells;
    const Mat& att_w = p.tensors[kAttW];
    const Mat& att_v = p.tensors[kAttV];

    std::vector<double> scores(static_cast<size_t>(t_len), 0.0);
    std::vector<double> u_local;
    double max_score = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int t = 0; t < t_len; ++t) {
        if (!mask[static_cast<size_t>(t)]) continue;
        any = true;
        double* u = nullptr;
        if (u_out) {
            u = u_out->row(t);
        } else {
            u_local.assign(static_cast<size_t>(h), 0.0);
            u = u_local.data();
        }
        std::fill(u, u + h, 0.0);
        mv_add(u, att_w, states.row(row_offset + t));
        double s = 0.0;
        for (int j = 0; j < h; ++j) {
            u[j] = std::tanh(u[j]);
            s += att_v(0, j) * u[j];
        }
        scores[static_cast<size_t>(t)] = s;
        max_score = std::max(max_score, s);
    }
    if (!any) throw AllMaskedError();

    weights.assign(static_cast<size_t>(t_len), 0.0);
    double z = 0.0;
    for (int t = 0; t < t_len; ++t) {
        if (!mask[static_cast<size_t>(t)]) continue;
        double e = std::exp(scores[static_cast<size_t>(t)] - max_score);
        weights[static_cast<size_t>(t)] = e;
        z += e;
    }
    context.assign(static_cast<size_t>(h), 0.0);
    for (int t = 0; t < t_len; ++t) {
        if (!mask[static_cast<size_t>(t)]) continue;
        double w = weights[static_cast<size_t>(t)] / z;
        weights[static_cast<size_t>(t)] = w;
        const double* s = states.row(row_offset + t);
        for (int j = 0; j < h; ++j) context[static_cast<size_t>(j)] += w * s[j];
    }
}

}  // namespace

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::lstm: return "lstm";
        case Arch::gru: return "gru";
        case Arch::attention_lstm: return "attention_lstm";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    if (s == "lstm") return Arch::lstm;
    if (s == "gru") return Arch::gru;
    if (s == "attention_lstm" || s == "attention") return Arch::attention_lstm;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

int Parameters::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

const Mat& Parameters::tensor(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no tensor named '" + name + "'");
    return tensors[static_cast<size_t>(i)];
}

Parameters init_parameters(const ModelConfig& config, uint64_t seed) {
    Parameters p = make_parameters(config);
    Rng rng(seed);
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        Mat& m = p.tensors[i];
        const std::string& name = p.names[i];
        const bool bias = m.cols == 1 && name != "att_v";
        if (bias) {
            double v = name == "b_f" ? 1.0 : 0.0;
            std::fill(m.a.begin(), m.a.end(), v);
            continue;
        }
        double bound = std::sqrt(6.0 / (m.cols + m.rows));
        for (double& w : m.a) w = rng.uniform(-bound, bound);
    }
    return p;
}

long parameter_count(const Parameters& p) {
    long n = 0;
    for (const Mat& m : p.tensors) n += static_cast<long>(m.rows) * m.cols;
    return n;
}

LstmStep lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                   const std::vector<double>& c_prev, const Parameters& p) {
    const int h = p.config.hidden_cells;
    LstmStep step;
    auto gate = [&](int base, bool is_tanh) {
        std::vector<double> a(static_cast<size_t>(h));
        const Mat& b = p.tensors[static_cast<size_t>(base) + 2];
        for (int j = 0; j < h; ++j) a[static_cast<size_t>(j)] = b(j, 0);
        mv_add(a.data(), p.tensors[static_cast<size_t>(base)], x.data());
        mv_add(a.data(), p.tensors[static_cast<size_t>(base) + 1], h_prev.data());
        for (double& v : a) v = is_tanh ? std::tanh(v) : sigmoid(v);
        return a;
    };
    step.i = gate(0, false);
    step.f = gate(3, false);
    step.g = gate(6, true);
    step.o = gate(9, false);
    step.c.resize(static_cast<size_t>(h));
    step.h.resize(static_cast<size_t>(h));
    for (int j = 0; j < h; ++j) {
        auto k = static_cast<size_t>(j);
        step.c[k] = step.f[k] * c_prev[k] + step.i[k] * step.g[k];
        step.h[k] = step.o[k] * std::tanh(step.c[k]);
    }
    return step;
}

GruStep gru_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                 const Parameters& p) {
    const int h = p.config.hidden_cells;
    GruStep step;
    auto affine = [&](int base) {
        std::vector<double> a(static_cast<size_t>(h));
        const Mat& b = p.tensors[static_cast<size_t>(base) + 2];
        for (int j = 0; j < h; ++j) a[static_cast<size_t>(j)] = b(j, 0);
        mv_add(a.data(), p.tensors[static_cast<size_t>(base)], x.data());
        return a;
    };
    step.z = affine(0);
    mv_add(step.z.data(), p.tensors[1], h_prev.data());
    for (double& v : step.z) v = sigmoid(v);
    step.r = affine(3);
    mv_add(step.r.data(), p.tensors[4], h_prev.data());
    for (double& v : step.r) v = sigmoid(v);
    step.hu.assign(static_cast<size_t>(h), 0.0);
    mv_add(step.hu.data(), p.tensors[7], h_prev.data());
    step.n = affine(6);
    step.h.resize(static_cast<size_t>(h));
    for (int j = 0; j < h; ++j) {
        auto k = static_cast<size_t>(j);
        step.n[k] = std::tanh(step.n[k] + step.r[k] * step.hu[k]);
        step.h[k] = (1.0 - step.z[k]) * step.n[k] + step.z[k] * h_prev[k];
    }
    return step;
}

AttentionPoolResult attention_pool(const Mat& states, const std::vector<uint8_t>& mask,
                                   const Parameters& p) {
    AttentionPoolResult out;
    attention_apply(states, 0, mask, p, nullptr, out.weights, out.context);
    return out;
}

double forward(const Mat& x, const std::vector<uint8_t>& mask, const Parameters& p,
               ForwardTrace* trace) {
    const ModelConfig& cfg = p.config;
    const int t_len = x.rows;
    const int h = cfg.hidden_cells;
    if (x.cols != cfg.input_dim) throw std::invalid_argument("input width mismatch");
    if (static_cast<int>(mask.size()) != t_len) throw std::invalid_argument("mask length mismatch");

    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    const bool gru = cfg.architecture == Arch::gru;
    const bool att = cfg.architecture == Arch::attention_lstm;

    tr.h = Mat(t_len + 1, h);
    tr.last_unmasked = -1;
    if (!gru) {
        tr.c = Mat(t_len + 1, h);
        tr.gi = Mat(t_len, h);
        tr.gf = Mat(t_len, h);
        tr.gg = Mat(t_len, h);
        tr.go = Mat(t_len, h);
    } else {
        tr.gz = Mat(t_len, h);
        tr.gr = Mat(t_len, h);
        tr.gn = Mat(t_len, h);
        tr.hu = Mat(t_len, h);
    }
    if (att) tr.att_u = Mat(t_len, h);

    for (int t = 0; t < t_len; ++t) {
        const double* h_prev = tr.h.row(t);
        double* h_cur = tr.h.row(t + 1);
        if (!mask[static_cast<size_t>(t)]) {
            std::copy(h_prev, h_prev + h, h_cur);
            if (!gru) {
                const double* c_prev = tr.c.row(t);
                std::copy(c_prev, c_prev + h, tr.c.row(t + 1));
            }
            continue;
        }
        tr.last_unmasked = t;
        const double* x_t = x.row(t);

        if (!gru) {
            double* gi = tr.gi.row(t);
            double* gf = tr.gf.row(t);
            double* gg = tr.gg.row(t);
            double* go = tr.go.row(t);
            double* rows[4] = {gi, gf, gg, go};
            for (int q = 0; q < 4; ++q) {
                double* a = rows[q];
                const int base = q * 3;
                const Mat& b = p.tensors[static_cast<size_t>(base) + 2];
                for (int j = 0; j < h; ++j) a[j] = b(j, 0);
                mv_add(a, p.tensors[static_cast<size_t>(base)], x_t);
                mv_add(a, p.tensors[static_cast<size_t>(base) + 1], h_prev);
            }
            const double* c_prev = tr.c.row(t);
            double* c_cur = tr.c.row(t + 1);
            for (int j = 0; j < h; ++j) {
                gi[j] = sigmoid(gi[j]);
                gf[j] = sigmoid(gf[j]);
                gg[j] = std::tanh(gg[j]);
                go[j] = sigmoid(go[j]);
                c_cur[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
                h_cur[j] = go[j] * std::tanh(c_cur[j]);
            }
        } else {
            double* gz = tr.gz.row(t);
            double* gr = tr.gr.row(t);
            double* gn = tr.gn.row(t);
            double* hu = tr.hu.row(t);
            const Mat& b_z = p.tensors[2];
            const Mat& b_r = p.tensors[5];
            const Mat& b_n = p.tensors[8];
            for (int j = 0; j < h; ++j) {
                gz[j] = b_z(j, 0);
                gr[j] = b_r(j, 0);
                gn[j] = b_n(j, 0);
                hu[j] = 0.0;
            }
            mv_add(gz, p.tensors[0], x_t);
            mv_add(gz, p.tensors[1], h_prev);
            mv_add(gr, p.tensors[3], x_t);
            mv_add(gr, p.tensors[4], h_prev);
            mv_add(gn, p.tensors[6], x_t);
            mv_add(hu, p.tensors[7], h_prev);
            for (int j = 0; j < h; ++j) {
                gz[j] = sigmoid(gz[j]);
                gr[j] = sigmoid(gr[j]);
                gn[j] = std::tanh(gn[j] + gr[j] * hu[j]);
                h_cur[j] = (1.0 - gz[j]) * gn[j] + gz[j] * h_prev[j];
            }
        }
    }

    const Mat& head_w = p.tensors[static_cast<size_t>(head_w_index(cfg))];
    const Mat& head_b = p.tensors[static_cast<size_t>(head_w_index(cfg)) + 1];
    double logit = head_b(0, 0);
    if (att) {
        if (tr.last_unmasked < 0) throw AllMaskedError();
        attention_apply(tr.h, 1, mask, p, &tr.att_u, tr.att_weight, tr.context);
        for (int j = 0; j < h; ++j) logit += head_w(0, j) * tr.context[static_cast<size_t>(j)];
    } else {
        const double* h_final = tr.h.row(t_len);
        for (int j = 0; j < h; ++j) logit += head_w(0, j) * h_final[j];
    }
    tr.logit = logit;
    tr.prob = sigmoid(logit);
    return tr.prob;
}

double weighted_bce(double y, double p, double w_pos, double w_neg) {
    const double eps = 1e-7;
    const double pc = std::clamp(p, eps, 1.0 - eps);
    return -(w_pos * y * std::log(pc) + w_neg * (1.0 - y) * std::log1p(-pc));
}

BackwardResult backward(const Mat& x, const std::vector<uint8_t>& mask, double y,
                        double w_pos, double w_neg, const Parameters& p) {
    const ModelConfig& cfg = p.config;
    const int t_len = x.rows;
    const int h = cfg.hidden_cells;
    const bool gru = cfg.architecture == Arch::gru;
    const bool att = cfg.architecture == Arch::attention_lstm;

    ForwardTrace tr;
    BackwardResult out;
    out.probability = forward(x, mask, p, &tr);
    out.loss = weighted_bce(y, out.probability, w_pos, w_neg);
    out.grads.clear();
    out.grads.reserve(p.tensors.size());
    for (const Mat& m : p.tensors) out.grads.emplace_back(m.rows, m.cols);

    const double eps = 1e-7;
    const double prob = out.probability;
    double dz = 0.0;
    if (prob > eps && prob < 1.0 - eps)
        dz = -w_pos * y * (1.0 - prob) + w_neg * (1.0 - y) * prob;

    const int hw = head_w_index(cfg);
    const Mat& head_w = p.tensors[static_cast<size_t>(hw)];
    Mat& g_head_w = out.grads[static_cast<size_t>(hw)];
    Mat& g_head_b = out.grads[static_cast<size_t>(hw) + 1];
    g_head_b(0, 0) = dz;

    std::vector<double> dh(static_cast<size_t>(h), 0.0);
    std::vector<double> dc(static_cast<size_t>(h), 0.0);
    Mat dh_inject;

    if (!att) {
        const double* h_final = tr.h.row(t_len);
        for (int j = 0; j < h; ++j) {
            g_head_w(0, j) = dz * h_final[j];
            dh[static_cast<size_t>(j)] = dz * head_w(0, j);
        }
    } else {
        std::vector<double> dctx(static_cast<size_t>(h));
        for (int j = 0; j < h; ++j) {
            g_head_w(0, j) = dz * tr.context[static_cast<size_t>(j)];
            dctx[static_cast<size_t>(j)] = dz * head_w(0, j);
        }

        dh_inject = Mat(t_len, h);
        const Mat& att_w = p.tensors[kAttW];
        const Mat& att_v = p.tensors[kAttV];
        Mat& g_att_w = out.grads[kAttW];
        Mat& g_att_v = out.grads[kAttV];

        std::vector<double> dalpha(static_cast<size_t>(t_len), 0.0);
        double weighted_sum = 0.0;
        for (int t = 0; t < t_len; ++t) {
            if (!mask[static_cast<size_t>(t)]) continue;
            const double* h_t = tr.h.row(t + 1);
            double dot = 0.0;
            for (int j = 0; j < h; ++j) dot += dctx[static_cast<size_t>(j)] * h_t[j];
            dalpha[static_cast<size_t>(t)] = dot;
            weighted_sum += tr.att_weight[static_cast<size_t>(t)] * dot;
        }
        std::vector<double> da_u(static_cast<size_t>(h));
        for (int t = 0; t < t_len; ++t) {
            if (!mask[static_cast<size_t>(t)]) continue;
            const double alpha = tr.att_weight[static_cast<size_t>(t)];
            const double ds = alpha * (dalpha[static_cast<size_t>(t)] - weighted_sum);
            const double* u = tr.att_u.row(t);
            const double* h_t = tr.h.row(t + 1);
            double* inj = dh_inject.row(t);
            for (int j = 0; j < h; ++j) {
                g_att_v(0, j) += ds * u[j];
                da_u[static_cast<size_t>(j)] = ds * att_v(0, j) * (1.0 - u[j] * u[j]);
                inj[j] += alpha * dctx[static_cast<size_t>(j)];
            }
            outer_add(g_att_w, da_u.data(), h_t);
            mtv_add(inj, att_w, da_u.data());
        }
    }

    std::vector<double> da_a(static_cast<size_t>(h)), da_b(static_cast<size_t>(h)),
        da_c(static_cast<size_t>(h)), da_d(static_cast<size_t>(h)),
        dh_new(static_cast<size_t>(h));

    for (int t = t_len - 1; t >= 0; --t) {
        if (!mask[static_cast<size_t>(t)]) continue;
        if (att) {
            const double* inj = dh_inject.row(t);
            for (int j = 0; j < h; ++j) dh[static_cast<size_t>(j)] += inj[j];
        }
        const double* x_t = x.row(t);
        const double* h_prev = tr.h.row(t);

        if (!gru) {
            const double* gi = tr.gi.row(t);
            const double* gf = tr.gf.row(t);
            const double* gg = tr.gg.row(t);
            const double* go = tr.go.row(t);
            const double* c_prev = tr.c.row(t);
            const double* c_cur = tr.c.row(t + 1);
            for (int j = 0; j < h; ++j) {
                auto k = static_cast<size_t>(j);
                const double tc = std::tanh(c_cur[j]);
                const double da_o = dh[k] * tc * go[j] * (1.0 - go[j]);
                const double dct = dc[k] + dh[k] * go[j] * (1.0 - tc * tc);
                da_a[k] = dct * gg[j] * gi[j] * (1.0 - gi[j]);
                da_b[k] = dct * c_prev[j] * gf[j] * (1.0 - gf[j]);
                da_c[k] = dct * gi[j] * (1.0 - gg[j] * gg[j]);
                da_d[k] = da_o;
                dc[k] = dct * gf[j];
            }
            const double* das[4] = {da_a.data(), da_b.data(), da_c.data(), da_d.data()};
            std::fill(dh_new.begin(), dh_new.end(), 0.0);
            for (int q = 0; q < 4; ++q) {
                const int base = q * 3;
                outer_add(out.grads[static_cast<size_t>(base)], das[q], x_t);
                outer_add(out.grads[static_cast<size_t>(base) + 1], das[q], h_prev);
                Mat& gb = out.grads[static_cast<size_t>(base) + 2];
                for (int j = 0; j < h; ++j) gb(j, 0) += das[q][j];
                mtv_add(dh_new.data(), p.tensors[static_cast<size_t>(base) + 1], das[q]);
            }
            dh = dh_new;
        } else {
            const double* gz = tr.gz.row(t);
            const double* gr = tr.gr.row(t);
            const double* gn = tr.gn.row(t);
            const double* hu = tr.hu.row(t);
            std::vector<double>& da_z = da_a;
            std::vector<double>& da_r = da_b;
            std::vector<double>& da_n = da_c;
            std::vector<double>& dhu = da_d;
            for (int j = 0; j < h; ++j) {
                auto k = static_cast<size_t>(j);
                const double dzg = dh[k] * (h_prev[j] - gn[j]);
                da_z[k] = dzg * gz[j] * (1.0 - gz[j]);
                const double dn = dh[k] * (1.0 - gz[j]);
                da_n[k] = dn * (1.0 - gn[j] * gn[j]);
                da_r[k] = da_n[k] * hu[j] * gr[j] * (1.0 - gr[j]);
                dhu[k] = da_n[k] * gr[j];
                dh_new[k] = dh[k] * gz[j];
            }
            outer_add(out.grads[0], da_z.data(), x_t);
            outer_add(out.grads[1], da_z.data(), h_prev);
            outer_add(out.grads[3], da_r.data(), x_t);
            outer_add(out.grads[4], da_r.data(), h_prev);
            outer_add(out.grads[6], da_n.data(), x_t);
            outer_add(out.grads[7], dhu.data(), h_prev);
            for (int j = 0; j < h; ++j) {
                auto k = static_cast<size_t>(j);
                out.grads[2](j, 0) += da_z[k];
                out.grads[5](j, 0) += da_r[k];
                out.grads[8](j, 0) += da_n[k];
            }
            mtv_add(dh_new.data(), p.tensors[1], da_z.data());
            mtv_add(dh_new.data(), p.tensors[4], da_r.data());
            mtv_add(dh_new.data(), p.tensors[7], dhu.data());
            dh = dh_new;
        }
    }
    return out;
}

AdamState init_adam(const Parameters& p) {
    AdamState s;
    s.m.reserve(p.tensors.size());
    s.v.reserve(p.tensors.size());
    for (const Mat& m : p.tensors) {
        s.m.emplace_back(m.rows, m.cols);
        s.v.emplace_back(m.rows, m.cols);
    }
    return s;
}

void adam_step(Parameters& p, const std::vector<Mat>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        auto& w = p.tensors[i].a;
        const auto& g = grads[i].a;
        auto& m = state.m[i].a;
        auto& v = state.v[i].a;
        for (size_t k = 0; k < w.size(); ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            w[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

namespace {

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

void mat_from_json(const json& j, Mat& m) {
    if (!j.is_array() || static_cast<int>(j.size()) != m.rows)
        throw CheckpointError("tensor row count mismatch");
    for (int r = 0; r < m.rows; ++r) {
        const json& row = j.at(static_cast<size_t>(r));
        if (!row.is_array() || static_cast<int>(row.size()) != m.cols)
            throw CheckpointError("tensor column count mismatch");
        for (int c = 0; c < m.cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
    }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json j;
    const ModelConfig& cfg = ckpt.params.config;
    j["config"] = {
        {"architecture", arch_name(cfg.architecture)},
        {"hidden_cells", cfg.hidden_cells},
        {"input_dim", cfg.input_dim},
        {"seq_len", cfg.seq_len},
        {"seed", cfg.seed},
    };
    j["feature_order"] = feature_names();
    j["scaler"]["mean"] = ckpt.scaler.mean;
    j["scaler"]["stddev"] = ckpt.scaler.stddev;
    j["threshold"] = ckpt.threshold;
    j["seed"] = ckpt.seed;
    for (size_t i = 0; i < ckpt.params.tensors.size(); ++i)
        j["params"][ckpt.params.names[i]] = mat_to_json(ckpt.params.tensors[i]);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("bad checkpoint JSON: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        const json& cj = j.at("config");
        ModelConfig cfg;
        cfg.architecture = arch_from_string(cj.at("architecture").get<std::string>());
        cfg.hidden_cells = cj.at("hidden_cells").get<int>();
        cfg.input_dim = cj.at("input_dim").get<int>();
        cfg.seq_len = cj.at("seq_len").get<int>();
        cfg.seed = cj.at("seed").get<uint64_t>();

        const auto order = j.at("feature_order").get<std::vector<std::string>>();
        const auto& expected = feature_names();
        if (order.size() != expected.size() ||
            !std::equal(order.begin(), order.end(), expected.begin()))
            throw CheckpointError("checkpoint feature order does not match this build");

        ckpt.params = make_parameters(cfg);
        const json& pj = j.at("params");
        for (size_t i = 0; i < ckpt.params.tensors.size(); ++i)
            mat_from_json(pj.at(ckpt.params.names[i]), ckpt.params.tensors[i]);

        for (int f = 0; f < kFeatureCount; ++f) {
            ckpt.scaler.mean[f] = j.at("scaler").at("mean").at(f).get<double>();
            ckpt.scaler.stddev[f] = j.at("scaler").at("stddev").at(f).get<double>();
        }
        ckpt.threshold = j.at("threshold").get<double>();
        ckpt.seed = j.at("seed").get<uint64_t>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("bad checkpoint structure: ") + e.what());
    }
    return ckpt;
}

}
