#include "vemse/inference.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vemse/rng.hpp"

namespace vemse {

namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr std::uint64_t kTagNmfInit = 0x1A2B;
constexpr std::uint64_t kTagGamma = 0x6A33;
constexpr std::uint64_t kTagSurrogate = 0x5F0E;
constexpr std::uint64_t kTagMcemChain = 0x3C41;
constexpr std::uint64_t kTagReconZ = 0x9C0D;
constexpr std::uint64_t kTagReconMh = 0x44EE;
constexpr std::uint64_t kTagFrame = 0xF4A3;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void check_positive(const MatrixXd& m, const char* what) {
    if (!(m.array() > 0.0).all()) throw std::invalid_argument(std::string(what) + ": nonpositive variance");
}

// One random-walk Metropolis transition over all frames; per-frame draw
// order is fixed (L proposal gaussians, one acceptance uniform) so chains
// are reproducible for a given substream assignment.
void mh_transition(MatrixXd& z, VectorXd& logp, const MhTarget& target, double eps2,
                   std::vector<Rng>& rngs) {
    const double sd = std::sqrt(eps2);
    VectorXd proposal(z.rows());
    for (Eigen::Index t = 0; t < z.cols(); ++t) {
        Rng& rng = rngs[std::size_t(t)];
        for (Eigen::Index i = 0; i < z.rows(); ++i) proposal(i) = z(i, t) + sd * rng.gauss();
        const double lp = target(int(t), proposal);
        const double accept = std::exp(std::min(0.0, lp - logp(t)));
        if (rng.uniform() < accept) {
            z.col(t) = proposal;
            logp(t) = lp;
        }
    }
}

std::vector<Rng> frame_rngs(std::uint64_t seed, Eigen::Index n) {
    std::vector<Rng> rngs;
    rngs.reserve(std::size_t(n));
    for (Eigen::Index t = 0; t < n; ++t) rngs.emplace_back(derive_seed(seed, kTagFrame, std::uint64_t(t)));
    return rngs;
}

VectorXd eval_target(const MatrixXd& z, const MhTarget& target) {
    VectorXd logp(z.cols());
    for (Eigen::Index t = 0; t < z.cols(); ++t) logp(t) = target(int(t), z.col(t));
    return logp;
}

// Wiener gain averaged over explicit latent samples.
MatrixXd mean_wiener_gain(const std::vector<MatrixXd>& z_samples, const MatrixXd& sigma_n2,
                          const VaeModel& m) {
    MatrixXd gain = MatrixXd::Zero(sigma_n2.rows(), sigma_n2.cols());
    for (const auto& z : z_samples) {
        const ArrayXXd s2 = decode(m, z).array();
        gain.array() += s2 / (s2 + sigma_n2.array());
    }
    return gain / double(z_samples.size());
}

}  // namespace

SnPosterior posterior_sn(const MatrixXcd& x, const MatrixXd& gamma2, const MatrixXd& sigma_n2) {
    if (gamma2.rows() != x.rows() || gamma2.cols() != x.cols() || sigma_n2.rows() != x.rows() ||
        sigma_n2.cols() != x.cols())
        throw std::invalid_argument("posterior_sn: shape mismatch");
    check_positive(gamma2, "posterior_sn: gamma2");
    check_positive(sigma_n2, "posterior_sn: sigma_n2");

    SnPosterior p;
    const ArrayXXd denom = gamma2.array() + sigma_n2.array();
    const ArrayXXd gain = gamma2.array() / denom;
    p.mu_s = (x.array() * gain.cast<std::complex<double>>()).matrix();
    p.mu_n = x - p.mu_s;  // the means sum to x exactly
    p.sigma_ss = (gamma2.array() * sigma_n2.array() / denom).matrix();
    p.sigma_nn = p.sigma_ss;
    return p;
}

MatrixXd harmonic_mean_variance(const VaeModel& m, const std::vector<MatrixXd>& z_samples) {
    if (z_samples.empty())
        throw std::invalid_argument("harmonic_mean_variance: need samples");
    MatrixXd inv_sum;
    for (const auto& z : z_samples) {
        const MatrixXd s2 = decode(m, z);
        if (inv_sum.size() == 0)
            inv_sum = s2.array().inverse().matrix();
        else
            inv_sum.array() += s2.array().inverse();
    }
    return (double(z_samples.size()) * inv_sum.array().inverse()).matrix();
}

MatrixXd precision_gamma(const VaeModel& m, const MatrixXd& z_mean, const MatrixXd& z_var, int D,
                         std::uint64_t seed) {
    if (D < 1) throw std::invalid_argument("precision_gamma: D must be >= 1");
    EncoderOutput q{z_mean, z_var};
    return harmonic_mean_variance(m, reparam_sample(q, seed, D));
}

EncoderOutput posterior_z(const VaeModel& m, const MatrixXcd& mu_s, const MatrixXd& sigma_ss) {
    if (sigma_ss.rows() != mu_s.rows() || sigma_ss.cols() != mu_s.cols())
        throw std::invalid_argument("posterior_z: shape mismatch");
    if ((sigma_ss.array() < 0.0).any())
        throw std::invalid_argument("posterior_z: sigma_ss must be nonnegative");
    return encode(m, mu_s.cwiseAbs2() + sigma_ss);
}

EncoderOutput posterior_z_heuristic(const VaeModel& m, const MatrixXcd& mu_s) {
    return encode(m, mu_s.cwiseAbs2());
}

double complex_gauss_loglik(const VectorXcd& x, const VectorXd& var) {
    if (x.size() != var.size()) throw std::invalid_argument("complex_gauss_loglik: size mismatch");
    return (-var.array().log() - std::log(std::numbers::pi) -
            x.array().abs2() / var.array())
        .sum();
}

double latent_log_prior(const VectorXd& z) {
    return -0.5 * double(z.size()) * std::log(2.0 * std::numbers::pi) -
           0.5 * z.array().square().sum();
}

MatrixXd mh_step(const MatrixXd& z_prev, const MhTarget& target, double eps2,
                 std::uint64_t seed) {
    if (!(eps2 > 0.0)) throw std::invalid_argument("mh_step: eps2 must be positive");
    MatrixXd z = z_prev;
    VectorXd logp = eval_target(z, target);
    auto rngs = frame_rngs(seed, z.cols());
    mh_transition(z, logp, target, eps2, rngs);
    return z;
}

MhChainResult run_mh_chain(const MatrixXd& z0, const MhTarget& target, double eps2,
                           std::uint64_t seed, int n_iters, int keep_last) {
    if (!(eps2 > 0.0)) throw std::invalid_argument("run_mh_chain: eps2 must be positive");
    if (n_iters < 1 || keep_last < 1 || keep_last > n_iters)
        throw std::invalid_argument("run_mh_chain: bad chain geometry");
    MhChainResult res;
    MatrixXd z = z0;
    VectorXd logp = eval_target(z, target);
    auto rngs = frame_rngs(seed, z.cols());
    for (int it = 0; it < n_iters; ++it) {
        mh_transition(z, logp, target, eps2, rngs);
        if (it >= n_iters - keep_last) res.kept.push_back(z);
    }
    res.last = z;
    return res;
}

double free_energy_surrogate(const MatrixXcd& x, const VariationalState& st, const NmfParams& nmf,
                             const VaeModel& m, int D, std::uint64_t seed) {
    const ArrayXXd sigma_n2 = (nmf.W * nmf.H).array();
    const ArrayXXd c = st.sigma_ss.array();
    const ArrayXXd s_pow = st.mu_s.cwiseAbs2().array() + c;   // E|s|^2
    const ArrayXXd n_pow = st.mu_n.cwiseAbs2().array() + c;   // E|n|^2
    const double log_pi = std::log(std::numbers::pi);
    const double log_2pi = std::log(2.0 * std::numbers::pi);

    // E[log p(n)] under r
    double value = (-sigma_n2.log() - log_pi - n_pow / sigma_n2).sum();

    // E[log p(s|z)]: latent expectation by Monte Carlo
    EncoderOutput q{st.z_mean, st.z_var};
    const auto draws = reparam_sample(q, seed, D);
    ArrayXXd mean_log = ArrayXXd::Zero(x.rows(), x.cols());
    ArrayXXd mean_inv = ArrayXXd::Zero(x.rows(), x.cols());
    for (const auto& z : draws) {
        const ArrayXXd s2 = decode(m, z).array();
        mean_log += s2.log();
        mean_inv += s2.inverse();
    }
    mean_log /= double(draws.size());
    mean_inv /= double(draws.size());
    value += (-mean_log - log_pi - s_pow * mean_inv).sum();

    // E[log p(z)]
    value += (-0.5 * log_2pi - 0.5 * (st.z_mean.array().square() + st.z_var.array())).sum();

    // entropies of r(s) (complex) and r(z)
    value += (c.log() + log_pi + 1.0).sum();
    value += (0.5 * (st.z_var.array().log() + log_2pi + 1.0)).sum();
    return value;
}

VemResult run_vem(const ComplexSpectrogram& x, const VaeModel& m, const EngineConfig& cfg,
                  const IterObserver& observer) {
    cfg.validate();
    m.check_shapes();
    if (cfg.method == Method::mcem)
        throw std::invalid_argument("run_vem: config method is mcem");
    if (x.data.rows() != m.F)
        throw std::invalid_argument("run_vem: spectrogram bins do not match model F");
    const bool heuristic = cfg.method == Method::heuristic;

    const Eigen::Index N = x.data.cols();
    const MatrixXcd& X = x.data;

    VemResult res;
    res.nmf = init_nmf(m.F, cfg.K, int(N), derive_seed(cfg.seed, kTagNmfInit));
    res.report.method = cfg.method;
    res.report.config = cfg;

    VariationalState& st = res.state;
    {
        const EncoderOutput q0 = encode(m, X.cwiseAbs2());
        st.z_mean = q0.mean;
        st.z_var = q0.variance;
    }

    MatrixXd v_s_prev;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const auto t0 = std::chrono::steady_clock::now();

        st.gamma2 = precision_gamma(m, st.z_mean, st.z_var, cfg.D,
                                    derive_seed(cfg.seed, kTagGamma, std::uint64_t(it)));
        const MatrixXd sigma_n2 = res.nmf.product();
        SnPosterior sn = posterior_sn(X, st.gamma2, sigma_n2);
        st.mu_s = std::move(sn.mu_s);
        st.mu_n = std::move(sn.mu_n);
        st.sigma_ss = std::move(sn.sigma_ss);
        st.sigma_nn = std::move(sn.sigma_nn);

        const EncoderOutput q = heuristic ? posterior_z_heuristic(m, st.mu_s)
                                          : posterior_z(m, st.mu_s, st.sigma_ss);
        st.z_mean = q.mean;
        st.z_var = q.variance;

        const MatrixXd v_n = st.mu_n.cwiseAbs2() + st.sigma_nn;
        update_h(res.nmf, v_n);
        update_w(res.nmf, v_n);

        IterationRecord rec;
        rec.ms = elapsed_ms(t0);
        rec.cost = free_energy_surrogate(X, st, res.nmf, m, cfg.D,
                                         derive_seed(cfg.seed, kTagSurrogate, std::uint64_t(it)));
        if (observer) rec.si_sdr = observer(st.mu_s);
        res.report.iters.push_back(rec);
        res.report.iterations = it + 1;

        if (!st.mu_s.allFinite() || !res.nmf.W.allFinite() || !res.nmf.H.allFinite())
            throw std::runtime_error("run_vem: non-finite state at iteration " +
                                     std::to_string(it + 1));

        const MatrixXd v_s = st.mu_s.cwiseAbs2() + st.sigma_ss;
        if (v_s_prev.size() > 0) {
            const double rel = (v_s - v_s_prev).norm() / v_s_prev.norm();
            if (rel < cfg.tol) break;
        }
        v_s_prev = v_s;
    }
    return res;
}

McemResult run_mcem(const ComplexSpectrogram& x, const VaeModel& m, const EngineConfig& cfg,
                    const IterObserver& observer) {
    cfg.validate();
    m.check_shapes();
    if (x.data.rows() != m.F)
        throw std::invalid_argument("run_mcem: spectrogram bins do not match model F");

    const Eigen::Index N = x.data.cols();
    const MatrixXcd& X = x.data;
    const MatrixXd x_pow = X.cwiseAbs2();
    const int R = cfg.D;

    McemResult res;
    res.nmf = init_nmf(m.F, cfg.K, int(N), derive_seed(cfg.seed, kTagNmfInit));
    res.report.method = Method::mcem;
    res.report.config = cfg;

    MatrixXd z_curr = encode(m, x_pow).mean;

    MatrixXd v_s_prev;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const auto t0 = std::chrono::steady_clock::now();

        // E-step: MH chain targeting p(z | x; current parameters),
        // 4R total draws, last R kept.
        const MatrixXd sigma_n2 = res.nmf.product();
        const MhTarget target = [&](int frame, const VectorXd& z) {
            const VectorXd var = decode_col(m, z) + sigma_n2.col(frame);
            return complex_gauss_loglik(X.col(frame), var) + latent_log_prior(z);
        };
        MhChainResult chain = run_mh_chain(z_curr, target, cfg.mh.eps2,
                                           derive_seed(cfg.seed, kTagMcemChain, std::uint64_t(it)),
                                           4 * R, R);
        z_curr = chain.last;
        res.samples = std::move(chain.kept);

        // cache decoded speech variances of the kept samples
        std::vector<MatrixXd> s2_kept;
        s2_kept.reserve(res.samples.size());
        for (const auto& z : res.samples) s2_kept.push_back(decode(m, z));

        // M-step: multiplicative updates with sample-averaged statistics;
        // V_d = sigma^2(z_d) + WH is re-evaluated after the H update.
        auto averaged_stats = [&](const MatrixXd& wh, MatrixXd& A, MatrixXd& B) {
            ArrayXXd inv_mean = ArrayXXd::Zero(X.rows(), N);
            ArrayXXd inv2_mean = ArrayXXd::Zero(X.rows(), N);
            for (const auto& s2 : s2_kept) {
                const ArrayXXd v = s2.array() + wh.array();
                inv_mean += v.inverse();
                inv2_mean += v.inverse().square();
            }
            inv_mean /= double(s2_kept.size());
            inv2_mean /= double(s2_kept.size());
            A = (x_pow.array() * inv2_mean).matrix();
            B = inv_mean.matrix();
        };
        MatrixXd A, B;
        averaged_stats(res.nmf.product(), A, B);
        multiplicative_update_h(res.nmf, A, B);
        averaged_stats(res.nmf.product(), A, B);
        multiplicative_update_w(res.nmf, A, B);

        IterationRecord rec;
        rec.ms = elapsed_ms(t0);

        // Monte Carlo complete-data objective under the updated parameters.
        const MatrixXd wh_new = res.nmf.product();
        double q_value = 0.0;
        for (std::size_t d = 0; d < res.samples.size(); ++d) {
            for (Eigen::Index t = 0; t < N; ++t) {
                const VectorXd var = s2_kept[d].col(t) + wh_new.col(t);
                q_value += complex_gauss_loglik(X.col(t), var) +
                           latent_log_prior(res.samples[d].col(t));
            }
        }
        rec.cost = q_value / double(res.samples.size());

        // running estimate of the speech posterior power for the stop rule
        ArrayXXd v_s = ArrayXXd::Zero(X.rows(), N);
        for (const auto& s2 : s2_kept) {
            const ArrayXXd tot = s2.array() + wh_new.array();
            const ArrayXXd gain = s2.array() / tot;
            v_s += gain.square() * x_pow.array() + s2.array() * wh_new.array() / tot;
        }
        v_s /= double(s2_kept.size());

        if (observer) {
            const ComplexSpectrogram s_hat =
                reconstruct_from_samples(x, res.samples, res.nmf, m);
            rec.si_sdr = observer(s_hat.data);
        }
        res.report.iters.push_back(rec);
        res.report.iterations = it + 1;

        if (!res.nmf.W.allFinite() || !res.nmf.H.allFinite() || !v_s.allFinite())
            throw std::runtime_error("run_mcem: non-finite state at iteration " +
                                     std::to_string(it + 1));

        const MatrixXd v_s_m = v_s.matrix();
        if (v_s_prev.size() > 0) {
            const double rel = (v_s_m - v_s_prev).norm() / v_s_prev.norm();
            if (rel < cfg.tol) break;
        }
        v_s_prev = v_s_m;
    }
    return res;
}

ComplexSpectrogram reconstruct_from_samples(const ComplexSpectrogram& x,
                                            const std::vector<MatrixXd>& z_samples,
                                            const NmfParams& nmf, const VaeModel& m) {
    if (z_samples.empty())
        throw std::invalid_argument("reconstruct_from_samples: need samples");
    const MatrixXd gain = mean_wiener_gain(z_samples, nmf.product(), m);
    ComplexSpectrogram out = x;
    out.data = (x.data.array() * gain.array().cast<std::complex<double>>()).matrix();
    return out;
}

ComplexSpectrogram reconstruct(const ComplexSpectrogram& x, const VariationalState& st,
                               const NmfParams& nmf, const VaeModel& m, ReconMode mode,
                               const EngineConfig& cfg) {
    cfg.validate();
    switch (mode) {
        case ReconMode::s: {
            ComplexSpectrogram out = x;
            out.data = st.mu_s;
            return out;
        }
        case ReconMode::z: {
            EncoderOutput q{st.z_mean, st.z_var};
            const auto draws = reparam_sample(q, derive_seed(cfg.seed, kTagReconZ), cfg.D);
            return reconstruct_from_samples(x, draws, nmf, m);
        }
        case ReconMode::mh: {
            const MatrixXd sigma_n2 = nmf.product();
            const MhTarget target = [&](int frame, const VectorXd& z) {
                const VectorXd var = decode_col(m, z) + sigma_n2.col(frame);
                return complex_gauss_loglik(x.data.col(frame), var) + latent_log_prior(z);
            };
            MhChainResult chain =
                run_mh_chain(st.z_mean, target, cfg.mh.eps2, derive_seed(cfg.seed, kTagReconMh),
                             cfg.mh.n_iters, cfg.mh.keep_last);
            return reconstruct_from_samples(x, chain.kept, nmf, m);
        }
    }
    throw std::invalid_argument("reconstruct: invalid mode");
}

}  // namespace vemse
