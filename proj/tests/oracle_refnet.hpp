#pragma once

// Scalar-loop reference network used to cross-check src/neural.cpp. Looks
// tensors up by name instead of position and computes everything one
// element at a time, so the only thing shared with the production code is
// the parameter container. The finite-difference oracle perturbs entries
// of a copy and re-evaluates this reference, not the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dpi/linalg.hpp"
#include "dpi/neural.hpp"

namespace refnet {

using Vec = std::vector<double>;

inline double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// b + W x + U h, elementwise
inline Vec preact(const dpi::Mat& w, const dpi::Mat& u, const dpi::Mat& b, const Vec& x,
                  const Vec& h) {
    Vec out(static_cast<size_t>(w.rows));
    for (int j = 0; j < w.rows; ++j) {
        double s = b(j, 0);
        for (int k = 0; k < w.cols; ++k) s += w(j, k) * x[static_cast<size_t>(k)];
        for (int k = 0; k < u.cols; ++k) s += u(j, k) * h[static_cast<size_t>(k)];
        out[static_cast<size_t>(j)] = s;
    }
    return out;
}

struct LstmRef {
    Vec i, f, g, o, c, h;
};

inline LstmRef lstm_step(const Vec& x, const Vec& h0, const Vec& c0, const dpi::Parameters& p) {
    LstmRef s;
    s.i = preact(p.tensor("W_i"), p.tensor("U_i"), p.tensor("b_i"), x, h0);
    s.f = preact(p.tensor("W_f"), p.tensor("U_f"), p.tensor("b_f"), x, h0);
    s.g = preact(p.tensor("W_g"), p.tensor("U_g"), p.tensor("b_g"), x, h0);
    s.o = preact(p.tensor("W_o"), p.tensor("U_o"), p.tensor("b_o"), x, h0);
    const size_t n = s.i.size();
    s.c.resize(n);
    s.h.resize(n);
    for (size_t j = 0; j < n; ++j) {
        s.i[j] = sig(s.i[j]);
        s.f[j] = sig(s.f[j]);
        s.g[j] = std::tanh(s.g[j]);
        s.o[j] = sig(s.o[j]);
        s.c[j] = s.f[j] * c0[j] + s.i[j] * s.g[j];
        s.h[j] = s.o[j] * std::tanh(s.c[j]);
    }
    return s;
}

struct GruRef {
    Vec z, r, n, h;
};

inline GruRef gru_step(const Vec& x, const Vec& h0, const dpi::Parameters& p) {
    GruRef s;
    s.z = preact(p.tensor("W_z"), p.tensor("U_z"), p.tensor("b_z"), x, h0);
    s.r = preact(p.tensor("W_r"), p.tensor("U_r"), p.tensor("b_r"), x, h0);
    const size_t n = s.z.size();
    for (size_t j = 0; j < n; ++j) {
        s.z[j] = sig(s.z[j]);
        s.r[j] = sig(s.r[j]);
    }
    // candidate gate resets the recurrent term only: n = tanh(Wx + b + r*(Uh))
    const dpi::Mat& w_n = p.tensor("W_n");
    const dpi::Mat& u_n = p.tensor("U_n");
    const dpi::Mat& b_n = p.tensor("b_n");
    s.n.resize(n);
    s.h.resize(n);
    for (size_t j = 0; j < n; ++j) {
        double wx = b_n(static_cast<int>(j), 0);
        for (int k = 0; k < w_n.cols; ++k)
            wx += w_n(static_cast<int>(j), k) * x[static_cast<size_t>(k)];
        double uh = 0.0;
        for (int k = 0; k < u_n.cols; ++k)
            uh += u_n(static_cast<int>(j), k) * h0[static_cast<size_t>(k)];
        s.n[j] = std::tanh(wx + s.r[j] * uh);
        s.h[j] = (1.0 - s.z[j]) * s.n[j] + s.z[j] * h0[j];
    }
    return s;
}

struct AttRef {
    Vec weights;
    Vec context;
};

// softmax over tanh(att_w h_t) scored by att_v, masked steps excluded
inline AttRef attention(const std::vector<Vec>& states, const std::vector<uint8_t>& mask,
                        const dpi::Parameters& p) {
    const dpi::Mat& aw = p.tensor("att_w");
    const dpi::Mat& av = p.tensor("att_v");
    const size_t t_len = states.size();
    const int hidden = aw.rows;

    Vec scores(t_len, 0.0);
    double hi = -1e300;
    bool any = false;
    for (size_t t = 0; t < t_len; ++t) {
        if (!mask[t]) continue;
        any = true;
        double s = 0.0;
        for (int j = 0; j < hidden; ++j) {
            double uj = 0.0;
            for (int k = 0; k < aw.cols; ++k) uj += aw(j, k) * states[t][static_cast<size_t>(k)];
            s += av(0, j) * std::tanh(uj);
        }
        scores[t] = s;
        hi = std::max(hi, s);
    }
    if (!any) throw std::runtime_error("reference attention: all steps masked");

    AttRef out;
    out.weights.assign(t_len, 0.0);
    double z = 0.0;
    for (size_t t = 0; t < t_len; ++t) {
        if (!mask[t]) continue;
        out.weights[t] = std::exp(scores[t] - hi);
        z += out.weights[t];
    }
    out.context.assign(static_cast<size_t>(hidden), 0.0);
    for (size_t t = 0; t < t_len; ++t) {
        if (!mask[t]) continue;
        out.weights[t] /= z;
        for (int j = 0; j < hidden; ++j)
            out.context[static_cast<size_t>(j)] += out.weights[t] * states[t][static_cast<size_t>(j)];
    }
    return out;
}

// masked steps carry the state through untouched, exactly like production
inline double forward_prob(const dpi::Mat& x, const std::vector<uint8_t>& mask,
                           const dpi::Parameters& p) {
    const dpi::Mat& head_w = p.tensor("head_w");
    const int hidden = head_w.cols;
    const bool gru = p.config.architecture == dpi::Arch::gru;
    const bool att = p.config.architecture == dpi::Arch::attention_lstm;

    Vec h(static_cast<size_t>(hidden), 0.0);
    Vec c(static_cast<size_t>(hidden), 0.0);
    std::vector<Vec> states;
    states.reserve(static_cast<size_t>(x.rows));
    for (int t = 0; t < x.rows; ++t) {
        if (mask[static_cast<size_t>(t)]) {
            Vec xt(static_cast<size_t>(x.cols));
            for (int k = 0; k < x.cols; ++k) xt[static_cast<size_t>(k)] = x(t, k);
            if (gru) {
                h = gru_step(xt, h, p).h;
            } else {
                LstmRef s = lstm_step(xt, h, c, p);
                h = s.h;
                c = s.c;
            }
        }
        states.push_back(h);
    }

    double logit = p.tensor("head_b")(0, 0);
    if (att) {
        const Vec ctx = attention(states, mask, p).context;
        for (int j = 0; j < hidden; ++j) logit += head_w(0, j) * ctx[static_cast<size_t>(j)];
    } else {
        for (int j = 0; j < hidden; ++j) logit += head_w(0, j) * h[static_cast<size_t>(j)];
    }
    return sig(logit);
}

inline double bce(double y, double prob, double w_pos, double w_neg) {
    const double eps = 1e-7;
    const double pc = std::min(std::max(prob, eps), 1.0 - eps);
    return -(w_pos * y * std::log(pc) + w_neg * (1.0 - y) * std::log(1.0 - pc));
}

// five-point central differences of the reference loss, one parameter
// entry at a time; the fourth-order stencil keeps the quotient accurate
// even where the gradient itself is tiny
inline std::vector<dpi::Mat> fd_gradients(const dpi::Mat& x, const std::vector<uint8_t>& mask,
                                          double y, double w_pos, double w_neg,
                                          const dpi::Parameters& p, double step = 1e-4) {
    dpi::Parameters q = p;
    std::vector<dpi::Mat> grads;
    grads.reserve(q.tensors.size());
    for (const dpi::Mat& m : q.tensors) grads.emplace_back(m.rows, m.cols);
    for (size_t i = 0; i < q.tensors.size(); ++i) {
        dpi::Mat& m = q.tensors[i];
        for (size_t k = 0; k < m.a.size(); ++k) {
            const double keep = m.a[k];
            const auto at = [&](double delta) {
                m.a[k] = keep + delta;
                return bce(y, forward_prob(x, mask, q), w_pos, w_neg);
            };
            const double g = (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) +
                              at(-2.0 * step)) /
                             (12.0 * step);
            m.a[k] = keep;
            grads[i].a[k] = g;
        }
    }
    return grads;
}

// |a-b| relative to the larger magnitude, floored so vanishing gradients
// cannot divide by zero
inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1e-6, std::fabs(a), std::fabs(b)});
}

}  // namespace refnet
