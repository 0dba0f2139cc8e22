#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vemse/dsp.hpp"
#include "vemse/nmf.hpp"
#include "vemse/report.hpp"
#include "vemse/vae.hpp"

namespace vemse {

// Per-frame posterior statistics of the mean-field factorization
// r(s,n) r(z). The (s,n) posterior per bin is complex Gaussian with means
// summing to the mixture coefficient and a rank-1 covariance whose equal
// diagonal entries are sigma_ss = sigma_nn.
struct VariationalState {
    Eigen::MatrixXcd mu_s, mu_n;          // F x N
    Eigen::MatrixXd sigma_ss, sigma_nn;   // F x N, positive
    Eigen::MatrixXd gamma2;               // F x N, harmonic-mean speech variance
    Eigen::MatrixXd z_mean, z_var;        // L x N, r(z) parameters
};

struct SnPosterior {
    Eigen::MatrixXcd mu_s, mu_n;
    Eigen::MatrixXd sigma_ss, sigma_nn;
};

// Exact (s,n) posterior given per-bin speech variance gamma2 and noise
// variance sigma_n2:
//   mu_s = x * g2/(g2+sn2), mu_n = x - mu_s, sigma_ss = sigma_nn =
//   g2*sn2/(g2+sn2).
SnPosterior posterior_sn(const Eigen::MatrixXcd& x, const Eigen::MatrixXd& gamma2,
                         const Eigen::MatrixXd& sigma_n2);

// 1/gamma2 = mean_d 1/sigma_f^2(z^(d)) over explicit latent samples.
Eigen::MatrixXd harmonic_mean_variance(const VaeModel& m,
                                       const std::vector<Eigen::MatrixXd>& z_samples);

// Same, with the D samples reparametrized from N(z_mean, diag(z_var)).
Eigen::MatrixXd precision_gamma(const VaeModel& m, const Eigen::MatrixXd& z_mean,
                                const Eigen::MatrixXd& z_var, int D, std::uint64_t seed);

// Variational z update: encode the posterior speech power |mu_s|^2 + sigma_ss.
EncoderOutput posterior_z(const VaeModel& m, const Eigen::MatrixXcd& mu_s,
                          const Eigen::MatrixXd& sigma_ss);
// Heuristic variant: the sigma_ss term is dropped.
EncoderOutput posterior_z_heuristic(const VaeModel& m, const Eigen::MatrixXcd& mu_s);

// log of prod_f N_c(x_f; 0, var_f) = sum_f [-log(pi var) - |x|^2/var].
double complex_gauss_loglik(const Eigen::VectorXcd& x, const Eigen::VectorXd& var);
// log N(z; 0, I)
double latent_log_prior(const Eigen::VectorXd& z);

// Per-frame log target density; `frame` selects the column of z being moved.
using MhTarget = std::function<double(int frame, const Eigen::VectorXd& z)>;

// One random-walk Metropolis transition applied to every column
// independently: proposal N(z_prev, eps2 I), acceptance min(1, ratio).
// Per-frame randomness comes from substreams of (seed, frame).
Eigen::MatrixXd mh_step(const Eigen::MatrixXd& z_prev, const MhTarget& target, double eps2,
                        std::uint64_t seed);

struct MhChainResult {
    std::vector<Eigen::MatrixXd> kept;  // last keep_last states, oldest first
    Eigen::MatrixXd last;
};

// n_iters transitions from z0, retaining the last keep_last states.
MhChainResult run_mh_chain(const Eigen::MatrixXd& z0, const MhTarget& target, double eps2,
                           std::uint64_t seed, int n_iters, int keep_last);

// Monte Carlo estimate of the variational free energy
// E_r[log p(x, s, n, z) - log r(s, n, z)] with the s-integrals analytic and
// D latent draws from r(z). Reporting/diagnostics only.
double free_energy_surrogate(const Eigen::MatrixXcd& x, const VariationalState& st,
                             const NmfParams& nmf, const VaeModel& m, int D, std::uint64_t seed);

// Optional per-iteration hook: receives the engine's running speech estimate
// and returns an SI-SDR value stored in the report trace.
using IterObserver = std::function<double(const Eigen::MatrixXcd& s_hat)>;

struct VemResult {
    VariationalState state;
    NmfParams nmf;
    EnhanceReport report;
};

// Variational EM loop: exact (s,n) posterior, encoder-based z update
// (heuristic drops sigma_ss), one multiplicative H and W sweep per
// iteration. Stops when the relative Frobenius change of
// |mu_s|^2 + sigma_ss falls below cfg.tol. cfg.method selects vem or
// heuristic.
VemResult run_vem(const ComplexSpectrogram& x, const VaeModel& m, const EngineConfig& cfg,
                  const IterObserver& observer = {});

struct McemResult {
    std::vector<Eigen::MatrixXd> samples;  // kept latent batches of the last E-step
    NmfParams nmf;
    EnhanceReport report;
};

// Monte Carlo EM baseline: per iteration a Metropolis-Hastings chain of
// 4R draws on p(z|x) keeps the last R samples, then sample-averaged
// multiplicative NMF updates. Same stopping rule as run_vem.
McemResult run_mcem(const ComplexSpectrogram& x, const VaeModel& m, const EngineConfig& cfg,
                    const IterObserver& observer = {});

// Final speech estimate. Mode s: mu_s. Mode z: Wiener gain averaged over D
// draws from r(z). Mode mh: gain averaged over an MH chain on p(z|x) started
// at the mean of r(z) (cfg.mh geometry).
ComplexSpectrogram reconstruct(const ComplexSpectrogram& x, const VariationalState& st,
                               const NmfParams& nmf, const VaeModel& m, ReconMode mode,
                               const EngineConfig& cfg);

// Wiener estimate gain = mean_d sigma^2(z_d)/(sigma^2(z_d) + WH) applied to
// x; shared by mode-z/mh reconstruction and the MCEM engine.
ComplexSpectrogram reconstruct_from_samples(const ComplexSpectrogram& x,
                                            const std::vector<Eigen::MatrixXd>& z_samples,
                                            const NmfParams& nmf, const VaeModel& m);

}  // namespace vemse
