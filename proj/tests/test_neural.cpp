#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dpi/neural.hpp"
#include "dpi/rng.hpp"
#include "oracle_refnet.hpp"

using namespace dpi;

namespace {

std::vector<double> random_vec(Rng& rng, int n, double lo = -1.5, double hi = 1.5) {
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

Mat random_mat(Rng& rng, int rows, int cols, double lo = -1.5, double hi = 1.5) {
    Mat m(rows, cols);
    for (double& x : m.a) x = rng.uniform(lo, hi);
    return m;
}

// random weights everywhere, biases included, so no gate sits at its
// init value
Parameters random_params(Arch arch, int hidden, int input, uint64_t seed) {
    ModelConfig cfg;
    cfg.architecture = arch;
    cfg.hidden_cells = hidden;
    cfg.input_dim = input;
    cfg.seq_len = 0;  // unused by forward
    cfg.seed = seed;
    Parameters p = init_parameters(cfg, seed);
    Rng rng(mix_seed(seed, 77));
    for (Mat& m : p.tensors)
        for (double& w : m.a) w = rng.uniform(-0.8, 0.8);
    return p;
}

std::vector<uint8_t> random_mask(Rng& rng, int t_len, bool force_one = true) {
    std::vector<uint8_t> mask(static_cast<size_t>(t_len), 0);
    for (auto& m : mask) m = rng.bernoulli(0.7) ? 1 : 0;
    if (force_one) mask[static_cast<size_t>(rng.below(static_cast<uint64_t>(t_len)))] = 1;
    return mask;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("lstm cell matches the scalar reference") {
    Rng rng(101);
    for (int rep = 0; rep < 100; ++rep) {
        const int h = 1 + static_cast<int>(rng.below(8));
        const int d = 1 + static_cast<int>(rng.below(19));
        Parameters p = random_params(Arch::lstm, h, d, 1000 + static_cast<uint64_t>(rep));
        const auto x = random_vec(rng, d);
        const auto h0 = random_vec(rng, h);
        const auto c0 = random_vec(rng, h);

        const LstmStep got = lstm_cell(x, h0, c0, p);
        const refnet::LstmRef want = refnet::lstm_step(x, h0, c0, p);
        for (int j = 0; j < h; ++j) {
            auto k = static_cast<size_t>(j);
            CHECK(std::fabs(got.i[k] - want.i[k]) <= 1e-12);
            CHECK(std::fabs(got.f[k] - want.f[k]) <= 1e-12);
            CHECK(std::fabs(got.g[k] - want.g[k]) <= 1e-12);
            CHECK(std::fabs(got.o[k] - want.o[k]) <= 1e-12);
            CHECK(std::fabs(got.c[k] - want.c[k]) <= 1e-12);
            CHECK(std::fabs(got.h[k] - want.h[k]) <= 1e-12);
        }
    }
}

TEST_CASE("gru cell matches the scalar reference") {
    Rng rng(202);
    for (int rep = 0; rep < 100; ++rep) {
        const int h = 1 + static_cast<int>(rng.below(8));
        const int d = 1 + static_cast<int>(rng.below(19));
        Parameters p = random_params(Arch::gru, h, d, 2000 + static_cast<uint64_t>(rep));
        const auto x = random_vec(rng, d);
        const auto h0 = random_vec(rng, h);

        const GruStep got = gru_cell(x, h0, p);
        const refnet::GruRef want = refnet::gru_step(x, h0, p);
        for (int j = 0; j < h; ++j) {
            auto k = static_cast<size_t>(j);
            CHECK(std::fabs(got.z[k] - want.z[k]) <= 1e-12);
            CHECK(std::fabs(got.r[k] - want.r[k]) <= 1e-12);
            CHECK(std::fabs(got.n[k] - want.n[k]) <= 1e-12);
            CHECK(std::fabs(got.h[k] - want.h[k]) <= 1e-12);
        }
    }
}

TEST_CASE("attention pooling matches the scalar reference") {
    Rng rng(303);
    for (int rep = 0; rep < 100; ++rep) {
        const int h = 1 + static_cast<int>(rng.below(8));
        const int t_len = 1 + static_cast<int>(rng.below(12));
        Parameters p = random_params(Arch::attention_lstm, h, 3, 3000 + static_cast<uint64_t>(rep));
        const Mat states = random_mat(rng, t_len, h);
        const auto mask = random_mask(rng, t_len);

        const AttentionPoolResult got = attention_pool(states, mask, p);
        std::vector<refnet::Vec> rows;
        for (int t = 0; t < t_len; ++t)
            rows.emplace_back(states.row(t), states.row(t) + h);
        const refnet::AttRef want = refnet::attention(rows, mask, p);

        double total = 0.0;
        for (int t = 0; t < t_len; ++t) {
            auto k = static_cast<size_t>(t);
            CHECK(std::fabs(got.weights[k] - want.weights[k]) <= 1e-12);
            if (!mask[k]) CHECK(got.weights[k] == 0.0);
            total += got.weights[k];
        }
        CHECK(std::fabs(total - 1.0) <= 1e-12);
        for (int j = 0; j < h; ++j)
            CHECK(std::fabs(got.context[static_cast<size_t>(j)] -
                            want.context[static_cast<size_t>(j)]) <= 1e-12);
    }
}

TEST_CASE("attention pooling rejects an all-masked window") {
    Parameters p = random_params(Arch::attention_lstm, 4, 3, 9);
    Rng rng(9);
    const Mat states = random_mat(rng, 5, 4);
    const std::vector<uint8_t> mask(5, 0);
    CHECK_THROWS_AS(attention_pool(states, mask, p), AllMaskedError);

    const Mat x = random_mat(rng, 5, 3);
    CHECK_THROWS_AS(forward(x, mask, p), AllMaskedError);
}

TEST_CASE("all-masked input leaves the recurrent head at its resting point") {
    for (Arch arch : {Arch::lstm, Arch::gru}) {
        Parameters p = random_params(arch, 5, 4, 17);
        Rng rng(18);
        const Mat x = random_mat(rng, 6, 4);
        const std::vector<uint8_t> mask(6, 0);
        const double got = forward(x, mask, p);
        CHECK(got == refnet::sig(p.tensor("head_b")(0, 0)));
    }
}

TEST_CASE("forward matches the scalar reference under arbitrary masks") {
    Rng rng(404);
    for (Arch arch : {Arch::lstm, Arch::gru, Arch::attention_lstm}) {
        for (int rep = 0; rep < 30; ++rep) {
            const int h = 1 + static_cast<int>(rng.below(8));
            const int d = 1 + static_cast<int>(rng.below(10));
            const int t_len = 1 + static_cast<int>(rng.below(15));
            Parameters p = random_params(arch, h, d, 4000 + static_cast<uint64_t>(rep));
            const Mat x = random_mat(rng, t_len, d);
            const auto mask = random_mask(rng, t_len);
            const double got = forward(x, mask, p);
            const double want = refnet::forward_prob(x, mask, p);
            CHECK(std::fabs(got - want) <= 1e-12);
        }
    }
}

TEST_CASE("left padding never changes the output") {
    Rng rng(505);
    for (Arch arch : {Arch::lstm, Arch::gru, Arch::attention_lstm}) {
        for (int rep = 0; rep < 25; ++rep) {
            const int h = 2 + static_cast<int>(rng.below(6));
            const int d = 2 + static_cast<int>(rng.below(8));
            const int t_real = 1 + static_cast<int>(rng.below(10));
            const int pad = 1 + static_cast<int>(rng.below(8));
            Parameters p = random_params(arch, h, d, 5000 + static_cast<uint64_t>(rep));

            const Mat real = random_mat(rng, t_real, d);
            const std::vector<uint8_t> mask_real(static_cast<size_t>(t_real), 1);

            // padded rows hold garbage on purpose; the mask must hide it
            Mat padded = random_mat(rng, t_real + pad, d, -9.0, 9.0);
            std::vector<uint8_t> mask_padded(static_cast<size_t>(t_real + pad), 0);
            for (int t = 0; t < t_real; ++t) {
                for (int k = 0; k < d; ++k) padded(pad + t, k) = real(t, k);
                mask_padded[static_cast<size_t>(pad + t)] = 1;
            }

            CHECK(forward(real, mask_real, p) == forward(padded, mask_padded, p));
        }
    }
}

TEST_CASE("weighted bce pins the closed form and the clamp") {
    CHECK(std::fabs(weighted_bce(1.0, 0.5, 2.0, 1.0) - 2.0 * std::log(2.0)) <= 1e-12);
    CHECK(std::fabs(weighted_bce(0.0, 0.25, 5.0, 3.0) + 3.0 * std::log(0.75)) <= 1e-12);

    // p clamps to [1e-7, 1 - 1e-7] before the logs
    const double wall = -std::log(1e-7);
    CHECK(std::fabs(weighted_bce(1.0, 0.0, 1.0, 1.0) - wall) <= 1e-6 * wall);
    CHECK(std::fabs(weighted_bce(0.0, 1.0, 1.0, 1.0) - wall) <= 1e-6 * wall);
    CHECK(std::isfinite(weighted_bce(1.0, 1.0, 1.0, 1.0)));
    CHECK(weighted_bce(1.0, 1.0, 1.0, 1.0) >= 0.0);
}

TEST_CASE("backward agrees with central finite differences") {
    Rng rng(606);
    for (Arch arch : {Arch::lstm, Arch::gru, Arch::attention_lstm}) {
        for (int h : {2, 8}) {
            const int d = 7;
            const int t_len = 6;
            Parameters p = random_params(arch, h, d, 6000 + static_cast<uint64_t>(h));
            const Mat x = random_mat(rng, t_len, d);
            std::vector<uint8_t> mask(static_cast<size_t>(t_len), 1);
            mask[0] = 0;
            mask[3] = 0;
            const double y = h == 2 ? 1.0 : 0.0;
            const double w_pos = 3.1;
            const double w_neg = 0.7;

            const BackwardResult got = backward(x, mask, y, w_pos, w_neg, p);
            CHECK(std::fabs(got.probability - forward(x, mask, p)) <= 1e-15);
            CHECK(std::fabs(got.loss - weighted_bce(y, got.probability, w_pos, w_neg)) <= 1e-12);

            const auto fd = refnet::fd_gradients(x, mask, y, w_pos, w_neg, p);
            REQUIRE(fd.size() == got.grads.size());
            double worst = 0.0;
            for (size_t i = 0; i < fd.size(); ++i)
                for (size_t k = 0; k < fd[i].a.size(); ++k)
                    worst = std::max(worst, refnet::rel_err(fd[i].a[k], got.grads[i].a[k]));
            INFO(arch_name(arch) << " h=" << h << " worst rel err " << worst);
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("gradients vanish on fully masked steps") {
    Parameters p = random_params(Arch::lstm, 3, 4, 31);
    Rng rng(32);
    Mat x = random_mat(rng, 5, 4);
    std::vector<uint8_t> mask{0, 1, 1, 0, 1};

    const BackwardResult a = backward(x, mask, 1.0, 2.0, 1.0, p);
    // rewriting a masked row must not move anything
    for (int k = 0; k < 4; ++k) x(3, k) = 99.0;
    const BackwardResult b = backward(x, mask, 1.0, 2.0, 1.0, p);
    CHECK(a.probability == b.probability);
    for (size_t i = 0; i < a.grads.size(); ++i)
        for (size_t k = 0; k < a.grads[i].a.size(); ++k)
            CHECK(a.grads[i].a[k] == b.grads[i].a[k]);
}

TEST_CASE("adam follows the bias-corrected update") {
    ModelConfig cfg;
    cfg.architecture = Arch::gru;
    cfg.hidden_cells = 2;
    cfg.input_dim = 3;
    Parameters p = init_parameters(cfg, 11);
    const Parameters before = p;
    AdamState st = init_adam(p);
    CHECK(st.t == 0);
    REQUIRE(st.m.size() == p.tensors.size());

    Rng rng(12);
    std::vector<Mat> g1, g2;
    for (const Mat& m : p.tensors) {
        g1.push_back(random_mat(rng, m.rows, m.cols));
        g2.push_back(random_mat(rng, m.rows, m.cols));
    }
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    adam_step(p, g1, st, lr, b1, b2, eps);
    adam_step(p, g2, st, lr, b1, b2, eps);
    CHECK(st.t == 2);

    for (size_t i = 0; i < p.tensors.size(); ++i) {
        for (size_t k = 0; k < p.tensors[i].a.size(); ++k) {
            double w = before.tensors[i].a[k];
            double m = 0.0, v = 0.0;
            int t = 0;
            for (const auto* g : {&g1, &g2}) {
                ++t;
                const double grad = (*g)[i].a[k];
                m = b1 * m + (1.0 - b1) * grad;
                v = b2 * v + (1.0 - b2) * grad * grad;
                const double mhat = m / (1.0 - std::pow(b1, t));
                const double vhat = v / (1.0 - std::pow(b2, t));
                w -= lr * mhat / (std::sqrt(vhat) + eps);
            }
            CHECK(std::fabs(p.tensors[i].a[k] - w) <= 1e-15);
        }
    }
}

TEST_CASE("initialization respects xavier bounds and bias conventions") {
    for (Arch arch : {Arch::lstm, Arch::gru, Arch::attention_lstm}) {
        ModelConfig cfg;
        cfg.architecture = arch;
        cfg.hidden_cells = 8;
        cfg.input_dim = kFeatureCount;
        Parameters p = init_parameters(cfg, 42);

        for (size_t i = 0; i < p.tensors.size(); ++i) {
            const Mat& m = p.tensors[i];
            const std::string& name = p.names[i];
            if (m.cols == 1 && name != "att_v") {
                const double want = name == "b_f" ? 1.0 : 0.0;
                for (double w : m.a) CHECK(w == want);
                continue;
            }
            const double bound = std::sqrt(6.0 / (m.rows + m.cols));
            double spread = 0.0;
            for (double w : m.a) {
                CHECK(std::fabs(w) <= bound);
                spread = std::max(spread, std::fabs(w));
            }
            CHECK(spread > 0.0);
        }

        const Parameters again = init_parameters(cfg, 42);
        for (size_t i = 0; i < p.tensors.size(); ++i)
            CHECK(p.tensors[i].a == again.tensors[i].a);

        const Parameters other = init_parameters(cfg, 43);
        bool differs = false;
        for (size_t i = 0; i < p.tensors.size(); ++i)
            if (p.tensors[i].a != other.tensors[i].a) differs = true;
        CHECK(differs);
    }
}

TEST_CASE("parameter counts match the closed forms") {
    auto count = [](Arch arch, int h, int d) {
        ModelConfig cfg;
        cfg.architecture = arch;
        cfg.hidden_cells = h;
        cfg.input_dim = d;
        return parameter_count(init_parameters(cfg, 1));
    };
    const long gate = 8 * 19 + 8 * 8 + 8;
    CHECK(count(Arch::lstm, 8, 19) == 4 * gate + 8 + 1);
    CHECK(count(Arch::gru, 8, 19) == 3 * gate + 8 + 1);
    CHECK(count(Arch::attention_lstm, 8, 19) == 4 * gate + 8 * 8 + 8 + 8 + 1);
}

TEST_CASE("architecture names round trip") {
    for (Arch a : {Arch::lstm, Arch::gru, Arch::attention_lstm})
        CHECK(arch_from_string(arch_name(a)) == a);
    CHECK(arch_from_string("attention") == Arch::attention_lstm);
    CHECK_THROWS_AS(arch_from_string("transformer"), std::invalid_argument);
}

TEST_CASE("checkpoints round trip bit for bit") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dpi_ckpt_test";
    fs::create_directories(dir);

    for (Arch arch : {Arch::lstm, Arch::gru, Arch::attention_lstm}) {
        Checkpoint ckpt;
        ckpt.params = random_params(arch, 3, 5, 88);
        ckpt.seed = 1234567890123ULL;
        ckpt.threshold = 0.3125;
        Rng rng(99);
        for (int f = 0; f < kFeatureCount; ++f) {
            ckpt.scaler.mean[static_cast<size_t>(f)] = rng.uniform(-3.0, 3.0);
            ckpt.scaler.stddev[static_cast<size_t>(f)] = rng.uniform(0.1, 5.0);
        }

        const std::string path = (dir / (arch_name(arch) + ".json")).string();
        save_checkpoint(ckpt, path);
        const Checkpoint back = load_checkpoint(path);

        CHECK(back.params.config.architecture == arch);
        CHECK(back.params.config.hidden_cells == 3);
        CHECK(back.params.config.input_dim == 5);
        CHECK(back.seed == ckpt.seed);
        CHECK(back.threshold == ckpt.threshold);
        REQUIRE(back.params.tensors.size() == ckpt.params.tensors.size());
        for (size_t i = 0; i < ckpt.params.tensors.size(); ++i) {
            CHECK(back.params.names[i] == ckpt.params.names[i]);
            CHECK(back.params.tensors[i].a == ckpt.params.tensors[i].a);
        }
        CHECK(back.scaler.mean == ckpt.scaler.mean);
        CHECK(back.scaler.stddev == ckpt.scaler.stddev);

        const std::string path2 = (dir / (arch_name(arch) + "_resave.json")).string();
        save_checkpoint(back, path2);
        CHECK(slurp(path) == slurp(path2));
    }

    CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), CheckpointError);
    std::ofstream(dir / "garbage.json") << "{not json";
    CHECK_THROWS_AS(load_checkpoint((dir / "garbage.json").string()), CheckpointError);
    fs::remove_all(dir);
}
