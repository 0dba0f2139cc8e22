#include "vemse/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vemse/rng.hpp"

namespace vemse {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd glorot(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / double(rows + cols));
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
    return m;
}

void check_finite(const MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite values");
}

}  // namespace

VaeModel VaeModel::zeros(int F, int L) {
    if (F < 1 || L < 1) throw std::invalid_argument("VaeModel: F and L must be positive");
    VaeModel m;
    m.F = F;
    m.L = L;
    m.enc_w1 = MatrixXd::Zero(kVaeHidden, F);
    m.enc_b1 = MatrixXd::Zero(kVaeHidden, 1);
    m.enc_mean_w = MatrixXd::Zero(L, kVaeHidden);
    m.enc_mean_b = MatrixXd::Zero(L, 1);
    m.enc_logvar_w = MatrixXd::Zero(L, kVaeHidden);
    m.enc_logvar_b = MatrixXd::Zero(L, 1);
    m.dec_w1 = MatrixXd::Zero(kVaeHidden, L);
    m.dec_b1 = MatrixXd::Zero(kVaeHidden, 1);
    m.dec_out_w = MatrixXd::Zero(F, kVaeHidden);
    m.dec_out_b = MatrixXd::Zero(F, 1);
    return m;
}

VaeModel VaeModel::init(int F, int L, std::uint64_t seed) {
    VaeModel m = zeros(F, L);
    Rng rng(seed);
    m.enc_w1 = glorot(kVaeHidden, F, rng);
    m.enc_mean_w = glorot(L, kVaeHidden, rng);
    m.enc_logvar_w = glorot(L, kVaeHidden, rng);
    m.dec_w1 = glorot(kVaeHidden, L, rng);
    m.dec_out_w = glorot(F, kVaeHidden, rng);
    return m;
}

std::vector<VaeModel::ParamRef> VaeModel::params() {
    return {
        {"enc.fc1.weight", &enc_w1},      {"enc.fc1.bias", &enc_b1},
        {"enc.mean.weight", &enc_mean_w}, {"enc.mean.bias", &enc_mean_b},
        {"enc.logvar.weight", &enc_logvar_w}, {"enc.logvar.bias", &enc_logvar_b},
        {"dec.fc1.weight", &dec_w1},      {"dec.fc1.bias", &dec_b1},
        {"dec.out.weight", &dec_out_w},   {"dec.out.bias", &dec_out_b},
    };
}

std::vector<VaeModel::ConstParamRef> VaeModel::params() const {
    std::vector<ConstParamRef> out;
    for (const auto& p : const_cast<VaeModel*>(this)->params()) out.push_back({p.name, p.tensor});
    return out;
}

bool VaeModel::all_finite() const {
    for (const auto& p : params())
        if (!p.tensor->allFinite()) return false;
    return true;
}

void VaeModel::check_shapes() const {
    auto expect = [](const MatrixXd& m, int r, int c, const char* name) {
        if (m.rows() != r || m.cols() != c)
            throw std::invalid_argument(std::string("VaeModel: tensor ") + name +
                                        " has inconsistent shape");
    };
    expect(enc_w1, kVaeHidden, F, "enc.fc1.weight");
    expect(enc_b1, kVaeHidden, 1, "enc.fc1.bias");
    expect(enc_mean_w, L, kVaeHidden, "enc.mean.weight");
    expect(enc_mean_b, L, 1, "enc.mean.bias");
    expect(enc_logvar_w, L, kVaeHidden, "enc.logvar.weight");
    expect(enc_logvar_b, L, 1, "enc.logvar.bias");
    expect(dec_w1, kVaeHidden, L, "dec.fc1.weight");
    expect(dec_b1, kVaeHidden, 1, "dec.fc1.bias");
    expect(dec_out_w, F, kVaeHidden, "dec.out.weight");
    expect(dec_out_b, F, 1, "dec.out.bias");
}

EncoderOutput encode(const VaeModel& m, const MatrixXd& power_spec) {
    if (power_spec.rows() != m.F)
        throw std::invalid_argument("encode: input rows do not match model F");
    check_finite(power_spec, "encode");
    if ((power_spec.array() < 0.0).any())
        throw std::invalid_argument("encode: power spectrum must be nonnegative");

    const MatrixXd h =
        ((m.enc_w1 * power_spec).colwise() + m.enc_b1.col(0)).array().tanh().matrix();
    EncoderOutput out;
    out.mean = (m.enc_mean_w * h).colwise() + m.enc_mean_b.col(0);
    out.variance =
        (((m.enc_logvar_w * h).colwise() + m.enc_logvar_b.col(0)).array().exp()).matrix();
    return out;
}

MatrixXd decode(const VaeModel& m, const MatrixXd& z) {
    if (z.rows() != m.L) throw std::invalid_argument("decode: input rows do not match model L");
    check_finite(z, "decode");
    const MatrixXd h = ((m.dec_w1 * z).colwise() + m.dec_b1.col(0)).array().tanh().matrix();
    return (((m.dec_out_w * h).colwise() + m.dec_out_b.col(0)).array().exp()).matrix();
}

VectorXd decode_col(const VaeModel& m, const VectorXd& z) {
    const VectorXd h = (m.dec_w1 * z + m.dec_b1.col(0)).array().tanh().matrix();
    return (m.dec_out_w * h + m.dec_out_b.col(0)).array().exp().matrix();
}

std::vector<MatrixXd> reparam_sample(const EncoderOutput& q, std::uint64_t seed, int count) {
    if (count < 1) throw std::invalid_argument("reparam_sample: count must be >= 1");
    const Eigen::ArrayXXd sd = q.variance.array().sqrt();
    std::vector<MatrixXd> out;
    out.reserve(std::size_t(count));
    for (int d = 0; d < count; ++d) {
        Rng rng(derive_seed(seed, 0x5A11, std::uint64_t(d)));
        MatrixXd eps(q.mean.rows(), q.mean.cols());
        for (Eigen::Index j = 0; j < eps.cols(); ++j)
            for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = rng.gauss();
        out.push_back(q.mean + (sd * eps.array()).matrix());
    }
    return out;
}

double kl_to_prior(const EncoderOutput& q) {
    return 0.5 * (q.mean.array().square() + q.variance.array() - q.variance.array().log() - 1.0)
                     .sum();
}

double elbo(const VaeModel& m, const MatrixXd& power_spec,
            const std::vector<MatrixXd>& z_samples) {
    if (z_samples.empty()) throw std::invalid_argument("elbo: need at least one latent sample");
    double recon = 0.0;
    for (const auto& z : z_samples) {
        if (z.cols() != power_spec.cols())
            throw std::invalid_argument("elbo: sample frame count mismatch");
        const Eigen::ArrayXXd r = power_spec.array() / decode(m, z).array();
        recon += (r - r.log() - 1.0).sum();
    }
    recon /= double(z_samples.size());
    const EncoderOutput q = encode(m, power_spec);
    return -recon - kl_to_prior(q);
}

double vae_loss(const VaeModel& m, const MatrixXd& batch, const MatrixXd& eps) {
    const Eigen::Index B = batch.cols();
    const EncoderOutput q = encode(m, batch);
    const MatrixXd z = q.mean + (q.variance.array().sqrt() * eps.array()).matrix();
    const Eigen::ArrayXXd r = batch.array() / decode(m, z).array();
    const double recon = (r - r.log() - 1.0).sum();
    return (recon + kl_to_prior(q)) / double(B);
}

double vae_loss_grad(const VaeModel& m, const MatrixXd& batch, const MatrixXd& eps,
                     VaeModel& grad) {
    const Eigen::Index B = batch.cols();
    if (eps.rows() != m.L || eps.cols() != B)
        throw std::invalid_argument("vae_loss_grad: eps shape mismatch");

    // forward
    const MatrixXd a1 = (m.enc_w1 * batch).colwise() + m.enc_b1.col(0);
    const MatrixXd h1 = a1.array().tanh().matrix();
    const MatrixXd mu = (m.enc_mean_w * h1).colwise() + m.enc_mean_b.col(0);
    const MatrixXd lv = (m.enc_logvar_w * h1).colwise() + m.enc_logvar_b.col(0);
    const Eigen::ArrayXXd var = lv.array().exp();
    const Eigen::ArrayXXd sd = (0.5 * lv.array()).exp();
    const MatrixXd z = mu + (sd * eps.array()).matrix();
    const MatrixXd a2 = (m.dec_w1 * z).colwise() + m.dec_b1.col(0);
    const MatrixXd h2 = a2.array().tanh().matrix();
    const MatrixXd o = (m.dec_out_w * h2).colwise() + m.dec_out_b.col(0);
    const Eigen::ArrayXXd sig2 = o.array().exp();

    const Eigen::ArrayXXd ratio = batch.array() / sig2;
    const double recon = (ratio - batch.array().log() + o.array() - 1.0).sum();
    const double kl =
        0.5 * (mu.array().square() + var - lv.array() - 1.0).sum();
    const double loss = (recon + kl) / double(B);

    // backward (gradients of B*loss, scaled at the end)
    const MatrixXd g_o = (1.0 - ratio).matrix();
    grad.dec_out_w = g_o * h2.transpose();
    grad.dec_out_b = g_o.rowwise().sum();
    const MatrixXd g_a2 =
        ((m.dec_out_w.transpose() * g_o).array() * (1.0 - h2.array().square())).matrix();
    grad.dec_w1 = g_a2 * z.transpose();
    grad.dec_b1 = g_a2.rowwise().sum();
    const MatrixXd g_z = m.dec_w1.transpose() * g_a2;

    const MatrixXd g_mu = g_z + mu;  // + KL term
    const MatrixXd g_lv =
        (0.5 * g_z.array() * eps.array() * sd + 0.5 * (var - 1.0)).matrix();
    const MatrixXd g_h1 = m.enc_mean_w.transpose() * g_mu + m.enc_logvar_w.transpose() * g_lv;
    const MatrixXd g_a1 = (g_h1.array() * (1.0 - h1.array().square())).matrix();

    grad.enc_mean_w = g_mu * h1.transpose();
    grad.enc_mean_b = g_mu.rowwise().sum();
    grad.enc_logvar_w = g_lv * h1.transpose();
    grad.enc_logvar_b = g_lv.rowwise().sum();
    grad.enc_w1 = g_a1 * batch.transpose();
    grad.enc_b1 = g_a1.rowwise().sum();

    for (auto& p : grad.params()) *p.tensor /= double(B);
    grad.F = m.F;
    grad.L = m.L;
    return loss;
}

namespace {

// Adam with the usual bias-corrected moments.
struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<MatrixXd> m1, m2;

    Adam(VaeModel& model, double lr_) : lr(lr_) {
        for (auto& p : model.params()) {
            m1.push_back(MatrixXd::Zero(p.tensor->rows(), p.tensor->cols()));
            m2.push_back(MatrixXd::Zero(p.tensor->rows(), p.tensor->cols()));
        }
    }

    void step(VaeModel& model, VaeModel& grad) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, double(t));
        const double c2 = 1.0 - std::pow(beta2, double(t));
        auto ps = model.params();
        auto gs = grad.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto& g = *gs[i].tensor;
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
            m2[i] = (beta2 * m2[i].array() + (1.0 - beta2) * g.array().square()).matrix();
            ps[i].tensor->array() -=
                lr * (m1[i].array() / c1) / ((m2[i].array() / c2).sqrt() + eps);
        }
    }
};

}  // namespace

TrainResult train(const VaeModel& initial, const MatrixXd& frames, const TrainConfig& cfg) {
    initial.check_shapes();
    if (frames.cols() < 2) throw std::invalid_argument("train: dataset too small");
    if (frames.rows() != initial.F)
        throw std::invalid_argument("train: frame rows do not match model F");
    if (cfg.batch < 1 || cfg.max_epochs < 1 || cfg.patience < 0 || cfg.lr <= 0.0)
        throw std::invalid_argument("train: bad config");

    const Eigen::Index M = frames.cols();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(M));
    std::iota(idx.begin(), idx.end(), 0);
    {
        Rng rng(derive_seed(cfg.seed, 0x5317));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[std::size_t(rng.uniform_int(0, int(i) - 1))]);
    }
    Eigen::Index n_val = Eigen::Index(double(M) * cfg.val_fraction);
    n_val = std::clamp<Eigen::Index>(n_val, 1, M - 1);
    const Eigen::Index n_train = M - n_val;

    MatrixXd train_set(frames.rows(), n_train), val_set(frames.rows(), n_val);
    for (Eigen::Index i = 0; i < n_train; ++i) train_set.col(i) = frames.col(idx[std::size_t(i)]);
    for (Eigen::Index i = 0; i < n_val; ++i)
        val_set.col(i) = frames.col(idx[std::size_t(n_train + i)]);

    // Fixed validation noise: epoch-to-epoch val changes then reflect the
    // model alone, which keeps the patience rule stable.
    MatrixXd val_eps(initial.L, n_val);
    {
        Rng rng(derive_seed(cfg.seed, 0x7A1E));
        for (Eigen::Index j = 0; j < n_val; ++j)
            for (int i = 0; i < initial.L; ++i) val_eps(i, j) = rng.gauss();
    }

    VaeModel model = initial;
    VaeModel grad = VaeModel::zeros(model.F, model.L);
    Adam adam(model, cfg.lr);

    TrainResult result;
    result.model = model;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0xE60C, std::uint64_t(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[std::size_t(shuffle_rng.uniform_int(0, int(i) - 1))]);

        Rng eps_rng(derive_seed(cfg.seed, 0xE925, std::uint64_t(epoch)));
        double train_loss_sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n_train; start += cfg.batch) {
            const Eigen::Index b = std::min<Eigen::Index>(cfg.batch, n_train - start);
            MatrixXd batch(frames.rows(), b);
            for (Eigen::Index i = 0; i < b; ++i)
                batch.col(i) = train_set.col(order[std::size_t(start + i)]);
            MatrixXd eps(model.L, b);
            for (Eigen::Index j = 0; j < b; ++j)
                for (int i = 0; i < model.L; ++i) eps(i, j) = eps_rng.gauss();
            const double loss = vae_loss_grad(model, batch, eps, grad);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
            adam.step(model, grad);
            train_loss_sum += loss * double(b);
            seen += b;
        }

        const double val_loss = vae_loss(model, val_set, val_eps);
        if (!std::isfinite(val_loss))
            throw std::runtime_error("train: non-finite validation loss at epoch " +
                                     std::to_string(epoch));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_elbo = -train_loss_sum / double(seen);
        rec.val_elbo = -val_loss;
        rec.improved = val_loss < best_val;
        result.log.push_back(rec);

        if (rec.improved) {
            best_val = val_loss;
            result.model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best > cfg.patience) break;
        }
    }
    return result;
}

}  // namespace vemse
