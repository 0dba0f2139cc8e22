#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace vemse {

// Entry floor keeping W, H strictly positive (multiplicative updates cannot
// escape an exact zero).
constexpr double kNmfFloor = 1e-10;

// Rank-K nonnegative factorization of a noise variance matrix: (WH)_ft.
struct NmfParams {
    Eigen::MatrixXd W;  // F x K
    Eigen::MatrixXd H;  // K x N

    Eigen::MatrixXd product() const { return W * H; }
};

// Itakura-Saito divergence d(x, y) = x/y - log(x/y) - 1. Throws on
// nonpositive arguments.
double is_divergence(double x, double y);

// Sum of d_IS(V_ft, (WH)_ft) over all entries.
double is_cost(const Eigen::MatrixXd& V, const NmfParams& p);

// Entries uniform in [0.1, 1.1).
NmfParams init_nmf(int F, int K, int N, std::uint64_t seed);

// One multiplicative IS-divergence update of H (resp. W), floored at
// kNmfFloor. The IS cost against V never increases.
void update_h(NmfParams& p, const Eigen::MatrixXd& V);
void update_w(NmfParams& p, const Eigen::MatrixXd& V);

// Generic multiplicative cores: H <- H .* (W^T A) ./ (W^T B) and
// W <- W .* (A H^T) ./ (B H^T), floored. The plain updates use
// A = (WH)^-2 .* V, B = (WH)^-1; engines with sample-averaged statistics
// supply their own A, B.
void multiplicative_update_h(NmfParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
void multiplicative_update_w(NmfParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace vemse
