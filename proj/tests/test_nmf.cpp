#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vemse/nmf.hpp"
#include "vemse/rng.hpp"

using namespace vemse;
using Eigen::MatrixXd;

namespace {

// cost oracle: plain scalar loops, no shared code with is_cost
double oracle_cost(const MatrixXd& V, const MatrixXd& W, const MatrixXd& H) {
    const MatrixXd WH = W * H;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (Eigen::Index j = 0; j < V.cols(); ++j) {
            const double r = V(i, j) / WH(i, j);
            acc += r - std::log(r) - 1.0;
        }
    return acc;
}

MatrixXd random_positive(int r, int c, std::uint64_t seed, double lo = 0.1, double hi = 2.0) {
    Rng rng(seed);
    MatrixXd m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("is_divergence reference values") {
    CHECK(is_divergence(1.0, 1.0) == 0.0);
    CHECK(is_divergence(2.0, 1.0) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-12));
    CHECK(is_divergence(1.0, 2.0) == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-12));
    CHECK_THROWS_AS(is_divergence(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(is_divergence(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("V = WH is a fixed point") {
    NmfParams p = init_nmf(6, 2, 5, 99);
    const MatrixXd V = p.product();
    const NmfParams before = p;
    update_h(p, V);
    CHECK(((p.H - before.H).cwiseAbs().array() / before.H.array()).maxCoeff() < 1e-12);
    p = before;
    update_w(p, V);
    CHECK(((p.W - before.W).cwiseAbs().array() / before.W.array()).maxCoeff() < 1e-12);
}

TEST_CASE("single update never raises the cost (oracle-checked)") {
    const MatrixXd V = random_positive(4, 3, 5);
    NmfParams p = init_nmf(4, 2, 3, 6);
    double c = oracle_cost(V, p.W, p.H);
    update_h(p, V);
    double c2 = oracle_cost(V, p.W, p.H);
    CHECK(c2 <= c * (1.0 + 1e-12));
    update_w(p, V);
    double c3 = oracle_cost(V, p.W, p.H);
    CHECK(c3 <= c2 * (1.0 + 1e-12));
}

TEST_CASE("cost is non-increasing over many sweeps (property)") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const int K = 1 + int(trial % 4);
        const MatrixXd V = random_positive(8, 6, 100 + trial);
        NmfParams p = init_nmf(8, K, 6, 200 + trial);
        double prev = is_cost(V, p);
        for (int sweep = 0; sweep < 30; ++sweep) {
            update_h(p, V);
            update_w(p, V);
            const double cur = is_cost(V, p);
            CHECK(cur <= prev + std::abs(prev) * 1e-12);
            prev = cur;
        }
        CHECK((p.W.array() >= kNmfFloor).all());
        CHECK((p.H.array() >= kNmfFloor).all());
    }
}

TEST_CASE("rescaling W and H inversely leaves the cost unchanged") {
    const MatrixXd V = random_positive(5, 4, 13);
    NmfParams p = init_nmf(5, 3, 4, 14);
    const double c = is_cost(V, p);
    const double alpha = 3.7;
    NmfParams q;
    q.W = alpha * p.W;
    q.H = p.H / alpha;
    CHECK(is_cost(V, q) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("scalar case reaches the optimum in one W update") {
    NmfParams p;
    p.W = MatrixXd::Constant(1, 1, 0.4);
    p.H = MatrixXd::Constant(1, 1, 1.7);
    MatrixXd V = MatrixXd::Constant(1, 1, 2.9);
    update_w(p, V);
    CHECK(p.W(0, 0) == doctest::Approx(V(0, 0) / p.H(0, 0)).epsilon(1e-12));
    CHECK(is_cost(V, p) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("init_nmf is seeded and bounded") {
    const NmfParams a = init_nmf(7, 3, 5, 77);
    const NmfParams b = init_nmf(7, 3, 5, 77);
    CHECK(a.W == b.W);
    CHECK(a.H == b.H);
    CHECK((a.W.array() >= 0.1).all());
    CHECK((a.W.array() < 1.1).all());
    CHECK((a.H.array() >= 0.1).all());
    const NmfParams c = init_nmf(7, 3, 5, 78);
    CHECK(a.W != c.W);
}

TEST_CASE("update shape checks") {
    NmfParams p = init_nmf(4, 2, 3, 1);
    MatrixXd bad = MatrixXd::Ones(5, 3);
    CHECK_THROWS_AS(update_h(p, bad), std::invalid_argument);
    CHECK_THROWS_AS(update_w(p, bad), std::invalid_argument);
}
