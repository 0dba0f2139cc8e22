#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "vemse/rng.hpp"
#include "vemse/toy_data.hpp"
#include "vemse/vae.hpp"

using namespace vemse;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(int r, int c, std::uint64_t seed, double lo, double hi) {
    Rng rng(seed);
    MatrixXd m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

// scalar-loop re-implementation of the encoder forward pass
void oracle_encode(const VaeModel& m, const VectorXd& v, VectorXd& mean, VectorXd& var) {
    std::vector<double> h(kVaeHidden);
    for (int i = 0; i < kVaeHidden; ++i) {
        double a = m.enc_b1(i, 0);
        for (int f = 0; f < m.F; ++f) a += m.enc_w1(i, f) * v(f);
        h[std::size_t(i)] = std::tanh(a);
    }
    mean.resize(m.L);
    var.resize(m.L);
    for (int l = 0; l < m.L; ++l) {
        double mu = m.enc_mean_b(l, 0), lv = m.enc_logvar_b(l, 0);
        for (int i = 0; i < kVaeHidden; ++i) {
            mu += m.enc_mean_w(l, i) * h[std::size_t(i)];
            lv += m.enc_logvar_w(l, i) * h[std::size_t(i)];
        }
        mean(l) = mu;
        var(l) = std::exp(lv);
    }
}

VectorXd oracle_decode(const VaeModel& m, const VectorXd& z) {
    std::vector<double> h(kVaeHidden);
    for (int i = 0; i < kVaeHidden; ++i) {
        double a = m.dec_b1(i, 0);
        for (int l = 0; l < m.L; ++l) a += m.dec_w1(i, l) * z(l);
        h[std::size_t(i)] = std::tanh(a);
    }
    VectorXd out(m.F);
    for (int f = 0; f < m.F; ++f) {
        double o = m.dec_out_b(f, 0);
        for (int i = 0; i < kVaeHidden; ++i) o += m.dec_out_w(f, i) * h[std::size_t(i)];
        out(f) = std::exp(o);
    }
    return out;
}

}  // namespace

TEST_CASE("zero network: encoder outputs the prior, decoder outputs ones") {
    const VaeModel m = VaeModel::zeros(6, 3);
    const MatrixXd v = random_matrix(6, 4, 1, 0.0, 2.0);
    const EncoderOutput q = encode(m, v);
    CHECK(q.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK((q.variance.array() == 1.0).all());
    const MatrixXd s2 = decode(m, random_matrix(3, 4, 2, -1.0, 1.0));
    CHECK((s2.array() == 1.0).all());
}

TEST_CASE("forward passes match the straight-line oracle") {
    const VaeModel m = VaeModel::init(5, 2, 42);
    const MatrixXd v = random_matrix(5, 1, 3, 0.0, 3.0);
    const EncoderOutput q = encode(m, v);
    VectorXd mean, var;
    oracle_encode(m, v.col(0), mean, var);
    CHECK((q.mean.col(0) - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((q.variance.col(0) - var).cwiseAbs().maxCoeff() < 1e-12);

    const MatrixXd z = random_matrix(2, 1, 4, -2.0, 2.0);
    const MatrixXd s2 = decode(m, z);
    CHECK((s2.col(0) - oracle_decode(m, z.col(0))).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(decode_col(m, z.col(0)).isApprox(s2.col(0), 1e-15));
}

TEST_CASE("encode and decode are deterministic and column-independent") {
    const VaeModel m = VaeModel::init(4, 2, 7);
    MatrixXd v(4, 2);
    v.col(0) = random_matrix(4, 1, 9, 0.0, 1.0);
    v.col(1) = v.col(0);
    const EncoderOutput q = encode(m, v);
    CHECK(q.mean.col(0) == q.mean.col(1));
    CHECK(q.variance.col(0) == q.variance.col(1));
    const MatrixXd z = random_matrix(2, 3, 10, -1.0, 1.0);
    CHECK(decode(m, z) == decode(m, z));
}

TEST_CASE("decode output is strictly positive (property)") {
    const VaeModel m = VaeModel::init(8, 3, 21);
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const MatrixXd z = random_matrix(3, 5, 100 + trial, -30.0, 30.0);
        CHECK((decode(m, z).array() > 0.0).all());
    }
}

TEST_CASE("encode input validation") {
    const VaeModel m = VaeModel::init(4, 2, 7);
    CHECK_THROWS_AS(encode(m, MatrixXd::Ones(5, 2)), std::invalid_argument);
    CHECK_THROWS_AS(encode(m, MatrixXd::Constant(4, 2, -1.0)), std::invalid_argument);
    CHECK_THROWS_AS(decode(m, MatrixXd::Ones(3, 2)), std::invalid_argument);
}

TEST_CASE("reparametrized samples") {
    SUBCASE("zero variance collapses to the mean") {
        EncoderOutput q;
        q.mean = random_matrix(3, 2, 5, -1.0, 1.0);
        q.variance = MatrixXd::Zero(3, 2);
        const auto draws = reparam_sample(q, 11, 2);
        CHECK(draws[0] == q.mean);
        CHECK(draws[1] == q.mean);
    }
    SUBCASE("same seed, same draws") {
        EncoderOutput q;
        q.mean = random_matrix(3, 2, 6, -1.0, 1.0);
        q.variance = random_matrix(3, 2, 7, 0.5, 2.0);
        const auto a = reparam_sample(q, 123, 3);
        const auto b = reparam_sample(q, 123, 3);
        for (int d = 0; d < 3; ++d) CHECK(a[std::size_t(d)] == b[std::size_t(d)]);
        const auto c = reparam_sample(q, 124, 3);
        CHECK(a[0] != c[0]);
    }
    SUBCASE("large-sample moments match the encoder output within 2%") {
        EncoderOutput q;
        q.mean = MatrixXd::Constant(1, 1, 0.7);
        q.variance = MatrixXd::Constant(1, 1, 2.0);
        const int n = 100000;
        const auto draws = reparam_sample(q, 2024, n);
        double s1 = 0.0, s2 = 0.0;
        for (const auto& d : draws) {
            s1 += d(0, 0);
            s2 += d(0, 0) * d(0, 0);
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        CHECK(std::abs(mean - 0.7) < 0.02 * 0.7 + 0.01);
        CHECK(std::abs(var - 2.0) < 0.02 * 2.0);
    }
}

TEST_CASE("ELBO reference points") {
    SUBCASE("perfect reconstruction at the prior gives zero") {
        const VaeModel m = VaeModel::zeros(4, 2);
        const MatrixXd v = MatrixXd::Ones(4, 3);  // decoded variance is 1 everywhere
        const std::vector<MatrixXd> z{MatrixXd::Zero(2, 3)};
        CHECK(elbo(m, v, z) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("unit mean shift costs 1/2 per latent per frame") {
        VaeModel m = VaeModel::zeros(4, 2);
        m.enc_mean_b = MatrixXd::Ones(2, 1);
        const MatrixXd v = MatrixXd::Ones(4, 3);
        const std::vector<MatrixXd> z{MatrixXd::Zero(2, 3)};
        CHECK(elbo(m, v, z) == doctest::Approx(-0.5 * 2 * 3).epsilon(1e-12));
        EncoderOutput q = encode(m, v);
        CHECK(kl_to_prior(q) == doctest::Approx(0.5 * 2 * 3).epsilon(1e-12));
    }
    SUBCASE("matches a per-element summation oracle") {
        const VaeModel m = VaeModel::init(3, 2, 31);
        const MatrixXd v = random_matrix(3, 2, 32, 0.2, 2.0);
        const std::vector<MatrixXd> zs{random_matrix(2, 2, 33, -1.0, 1.0),
                                       random_matrix(2, 2, 34, -1.0, 1.0)};
        double recon = 0.0;
        for (const auto& z : zs) {
            for (int t = 0; t < 2; ++t) {
                const VectorXd s2 = oracle_decode(m, z.col(t));
                for (int f = 0; f < 3; ++f) {
                    const double r = v(f, t) / s2(f);
                    recon += r - std::log(r) - 1.0;
                }
            }
        }
        recon /= 2.0;
        double kl = 0.0;
        for (int t = 0; t < 2; ++t) {
            VectorXd mean, var;
            oracle_encode(m, v.col(t), mean, var);
            for (int l = 0; l < 2; ++l)
                kl += 0.5 * (mean(l) * mean(l) + var(l) - std::log(var(l)) - 1.0);
        }
        CHECK(elbo(m, v, zs) == doctest::Approx(-recon - kl).epsilon(1e-12));
    }
}

TEST_CASE("ELBO is finite and KL nonnegative (property)") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const VaeModel m = VaeModel::init(5, 3, 300 + trial);
        const MatrixXd v = random_matrix(5, 4, 400 + trial, 1e-6, 10.0);
        const EncoderOutput q = encode(m, v);
        CHECK(kl_to_prior(q) >= 0.0);
        const auto zs = reparam_sample(q, 500 + trial, 1);
        CHECK(std::isfinite(elbo(m, v, zs)));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    const int F = 4, L = 2, B = 3;
    VaeModel m = VaeModel::init(F, L, 1234);
    const MatrixXd batch = random_matrix(F, B, 77, 0.05, 3.0);
    const MatrixXd eps = random_matrix(L, B, 78, -1.5, 1.5);

    VaeModel grad = VaeModel::zeros(F, L);
    vae_loss_grad(m, batch, eps, grad);

    double max_rel = 0.0;
    auto refs = m.params();
    auto grefs = grad.params();
    for (std::size_t p = 0; p < refs.size(); ++p) {
        MatrixXd& tensor = *refs[p].tensor;
        for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
            for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
                const double save = tensor(i, j);
                const double h = 1e-6 * (1.0 + std::abs(save));
                tensor(i, j) = save + h;
                const double lp = vae_loss(m, batch, eps);
                tensor(i, j) = save - h;
                const double lm = vae_loss(m, batch, eps);
                tensor(i, j) = save;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = (*grefs[p].tensor)(i, j);
                const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    CHECK(max_rel <= 1e-4);
}

TEST_CASE("training on a tiny dataset raises the ELBO") {
    const int F = 6, L = 2;
    // one distinct frame replicated; capacity far exceeds the data
    MatrixXd frames(F, 5);
    const MatrixXd one = random_matrix(F, 1, 55, 0.2, 2.0);
    for (int i = 0; i < 5; ++i) frames.col(i) = one;

    TrainConfig cfg;
    cfg.batch = 4;
    cfg.max_epochs = 10;
    cfg.patience = 100;
    cfg.seed = 9;
    const TrainResult r = train(VaeModel::init(F, L, 8), frames, cfg);
    REQUIRE(r.log.size() == 10);
    CHECK(r.log.back().train_elbo > r.log.front().train_elbo);
}

TEST_CASE("patience zero stops at the first non-improving epoch") {
    MatrixXd frames = random_matrix(6, 30, 60, 0.2, 2.0);
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.max_epochs = 200;
    cfg.patience = 0;
    cfg.seed = 4;
    const TrainResult r = train(VaeModel::init(6, 2, 5), frames, cfg);
    REQUIRE(!r.log.empty());
    // every epoch but the last improved, and the last one did not
    for (std::size_t i = 0; i + 1 < r.log.size(); ++i) CHECK(r.log[i].improved);
    if (r.log.size() < 200) CHECK_FALSE(r.log.back().improved);
    CHECK(r.best_epoch == int(r.log.size()) - 1);
}

TEST_CASE("training aborts on non-finite loss") {
    MatrixXd frames = random_matrix(4, 12, 61, 0.2, 2.0);
    VaeModel m = VaeModel::init(4, 2, 6);
    m.enc_w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.batch = 4;
    cfg.max_epochs = 3;
    CHECK_THROWS_AS(train(m, frames, cfg), std::runtime_error);
}

TEST_CASE("train returns the best-validation snapshot") {
    MatrixXd frames = random_matrix(6, 40, 62, 0.2, 2.0);
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.max_epochs = 15;
    cfg.patience = 3;
    cfg.seed = 12;
    const TrainResult r = train(VaeModel::init(6, 2, 13), frames, cfg);
    double best = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& e : r.log)
        if (e.val_elbo > best) {
            best = e.val_elbo;
            best_epoch = e.epoch;
        }
    CHECK(r.best_epoch == best_epoch);
    // best-epoch validation loss is no worse than the first epoch's
    CHECK(-best <= -r.log.front().val_elbo);
}

TEST_CASE("toy dataset is seeded and non-degenerate") {
    const MatrixXd a = make_toy_dataset(31, 2, 256, 64);
    const MatrixXd b = make_toy_dataset(31, 2, 256, 64);
    CHECK(a == b);
    CHECK((a.array() >= 0.0).all());
    // every frame has positive energy
    CHECK((a.colwise().sum().array() > 0.0).all());
    const MatrixXd c = make_toy_dataset(32, 2, 256, 64);
    CHECK(a != c);

    const Waveform u1 = make_toy_utterance(5);
    const Waveform u2 = make_toy_utterance(5);
    CHECK(u1.samples == u2.samples);
    CHECK(u1.samples.size() >= 16000);
    CHECK(u1.samples.size() <= 3 * 16000);
}
