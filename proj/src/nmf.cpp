#include "vemse/nmf.hpp"

#include <cmath>
#include <stdexcept>

#include "vemse/rng.hpp"

namespace vemse {

double is_divergence(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0))
        throw std::invalid_argument("is_divergence: arguments must be positive");
    const double r = x / y;
    return r - std::log(r) - 1.0;
}

double is_cost(const Eigen::MatrixXd& V, const NmfParams& p) {
    const Eigen::ArrayXXd R = V.array() / (p.W * p.H).array();
    return (R - R.log() - 1.0).sum();
}

NmfParams init_nmf(int F, int K, int N, std::uint64_t seed) {
    if (F < 1 || K < 1 || N < 1) throw std::invalid_argument("init_nmf: bad dimensions");
    Rng rng(seed);
    NmfParams p;
    p.W.resize(F, K);
    p.H.resize(K, N);
    for (int j = 0; j < K; ++j)
        for (int i = 0; i < F; ++i) p.W(i, j) = rng.uniform(0.1, 1.1);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < K; ++i) p.H(i, j) = rng.uniform(0.1, 1.1);
    return p;
}

void multiplicative_update_h(NmfParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd num = p.W.transpose() * A;
    const Eigen::MatrixXd den = p.W.transpose() * B;
    p.H = (p.H.array() * num.array() / den.array()).max(kNmfFloor).matrix();
}

void multiplicative_update_w(NmfParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd num = A * p.H.transpose();
    const Eigen::MatrixXd den = B * p.H.transpose();
    p.W = (p.W.array() * num.array() / den.array()).max(kNmfFloor).matrix();
}

namespace {

void check_shape(const NmfParams& p, const Eigen::MatrixXd& V) {
    if (V.rows() != p.W.rows() || V.cols() != p.H.cols())
        throw std::invalid_argument("nmf update: V shape does not match W*H");
}

}  // namespace

void update_h(NmfParams& p, const Eigen::MatrixXd& V) {
    check_shape(p, V);
    const Eigen::ArrayXXd lam = (p.W * p.H).array();
    const Eigen::MatrixXd A = (V.array() / (lam * lam)).matrix();
    const Eigen::MatrixXd B = lam.inverse().matrix();
    multiplicative_update_h(p, A, B);
}

void update_w(NmfParams& p, const Eigen::MatrixXd& V) {
    check_shape(p, V);
    const Eigen::ArrayXXd lam = (p.W * p.H).array();
    const Eigen::MatrixXd A = (V.array() / (lam * lam)).matrix();
    const Eigen::MatrixXd B = lam.inverse().matrix();
    multiplicative_update_w(p, A, B);
}

}  // namespace vemse
