#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace vemse {

// The MLP width is part of the architecture, not a hyperparameter.
constexpr int kVaeHidden = 128;

// Gaussian spectrogram model with an amortized posterior. The decoder maps a
// latent code z in R^L to a per-bin variance sigma_f^2(z) > 0 through
// tanh(dec_w1 z + b) followed by a linear log-variance head; the encoder maps
// a power-spectrum frame to the mean and log-variance of a diagonal Gaussian
// over z the same way. All tensors are double precision.
struct VaeModel {
    int F = 0;  // frequency bins
    int L = 0;  // latent dimension

    Eigen::MatrixXd enc_w1;        // kVaeHidden x F
    Eigen::MatrixXd enc_b1;        // kVaeHidden x 1
    Eigen::MatrixXd enc_mean_w;    // L x kVaeHidden
    Eigen::MatrixXd enc_mean_b;    // L x 1
    Eigen::MatrixXd enc_logvar_w;  // L x kVaeHidden
    Eigen::MatrixXd enc_logvar_b;  // L x 1
    Eigen::MatrixXd dec_w1;        // kVaeHidden x L
    Eigen::MatrixXd dec_b1;        // kVaeHidden x 1
    Eigen::MatrixXd dec_out_w;     // F x kVaeHidden
    Eigen::MatrixXd dec_out_b;     // F x 1

    // All-zero tensors (encoder then outputs N(0,1), decoder outputs 1).
    static VaeModel zeros(int F, int L);
    // Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
    static VaeModel init(int F, int L, std::uint64_t seed);

    struct ParamRef {
        const char* name;
        Eigen::MatrixXd* tensor;
    };
    struct ConstParamRef {
        const char* name;
        const Eigen::MatrixXd* tensor;
    };
    // The ten trainable tensors in fixed order (also the serialization order).
    std::vector<ParamRef> params();
    std::vector<ConstParamRef> params() const;

    bool all_finite() const;
    void check_shapes() const;  // throws std::invalid_argument
};

struct EncoderOutput {
    Eigen::MatrixXd mean;      // L x N
    Eigen::MatrixXd variance;  // L x N, strictly positive
};

// Column-wise forward passes. Throw on dimension mismatch or non-finite input.
EncoderOutput encode(const VaeModel& m, const Eigen::MatrixXd& power_spec);
Eigen::MatrixXd decode(const VaeModel& m, const Eigen::MatrixXd& z);
Eigen::VectorXd decode_col(const VaeModel& m, const Eigen::VectorXd& z);

// count independent reparametrized batches z = mean + sqrt(var) .* eps.
std::vector<Eigen::MatrixXd> reparam_sample(const EncoderOutput& q, std::uint64_t seed, int count);

// KL(q || N(0,I)) summed over latents and frames; >= 0.
double kl_to_prior(const EncoderOutput& q);

// Evidence lower bound summed over frames, with the reconstruction
// expectation approximated by the given latent samples:
//   -sum_f d_IS(|s|^2, sigma_f^2(z)) - KL(q || prior).
double elbo(const VaeModel& m, const Eigen::MatrixXd& power_spec,
            const std::vector<Eigen::MatrixXd>& z_samples);

// Mean negative ELBO per frame for a batch, with fixed reparametrization
// noise eps (L x B). Deterministic in (m, batch, eps), which is what the
// finite-difference gradient check relies on.
double vae_loss(const VaeModel& m, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& eps);

// Same value, plus analytic gradients for every tensor (written into a
// model-shaped container).
double vae_loss_grad(const VaeModel& m, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& eps,
                     VaeModel& grad);

struct TrainConfig {
    double lr = 1e-3;
    int batch = 128;
    int patience = 10;   // stop once val loss has not improved for > patience epochs
    int max_epochs = 200;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_elbo = 0.0;
    double val_elbo = 0.0;
    bool improved = false;
};

struct TrainResult {
    VaeModel model;  // best-validation snapshot
    std::vector<EpochRecord> log;
    int best_epoch = 0;
};

// Adam ascent on the ELBO over power-spectrum frames (columns of `frames`).
// A seeded shuffle holds out cfg.val_fraction of the frames for validation.
// Throws std::runtime_error if the loss turns non-finite.
TrainResult train(const VaeModel& initial, const Eigen::MatrixXd& frames, const TrainConfig& cfg);

}  // namespace vemse
