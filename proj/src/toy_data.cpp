#include "vemse/toy_data.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vemse/rng.hpp"

namespace vemse {

namespace {

double rms(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / double(x.size()));
}

void scale_to_rms(std::vector<double>& x, double target) {
    const double r = rms(x);
    if (r <= 0.0) return;
    const double g = target / r;
    for (double& v : x) v *= g;
}

}  // namespace

Waveform make_toy_utterance(std::uint64_t seed, int sample_rate) {
    Rng rng(seed);
    const double dur = rng.uniform(1.0, 3.0);
    const std::size_t n = std::size_t(dur * sample_rate);

    const int n_partials = rng.uniform_int(2, 5);
    const double f0 = rng.uniform(110.0, 280.0);

    std::vector<double> x(n, 0.0);
    for (int k = 1; k <= n_partials; ++k) {
        const double amp = rng.uniform(0.3, 1.0) / std::sqrt(double(k));
        const double freq = f0 * k * (1.0 + rng.uniform(-0.01, 0.01));
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double mod_rate = rng.uniform(0.5, 4.0);  // Hz
        const double mod_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = double(i) / sample_rate;
            const double env =
                0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * mod_rate * t + mod_phase);
            x[i] += amp * env * std::sin(2.0 * std::numbers::pi * freq * t + phase);
        }
    }

    // AR(2) floor so spectral valleys stay well above zero
    {
        const double rho = rng.uniform(0.5, 0.9);
        const double theta = rng.uniform(0.2, 1.2);
        const double a1 = 2.0 * rho * std::cos(theta);
        const double a2 = -rho * rho;
        double y1 = 0.0, y2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = a1 * y1 + a2 * y2 + rng.gauss();
            x[i] += 0.02 * y;
            y2 = y1;
            y1 = y;
        }
    }

    scale_to_rms(x, 0.05);
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples = std::move(x);
    return w;
}

Waveform make_stationary_noise(std::uint64_t seed, std::size_t n_samples, int sample_rate,
                               NoiseKind kind) {
    if (n_samples == 0) throw std::invalid_argument("make_stationary_noise: empty");
    Rng rng(seed);
    std::vector<double> x(n_samples);
    if (kind == NoiseKind::white) {
        for (auto& v : x) v = rng.gauss();
    } else {
        const double a = 0.9;
        double y = 0.0;
        for (auto& v : x) {
            y = a * y + rng.gauss();
            v = y;
        }
    }
    scale_to_rms(x, 1.0);
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples = std::move(x);
    return w;
}

Eigen::MatrixXd make_toy_dataset(std::uint64_t seed, int n_utterances, int frame_size, int hop) {
    if (n_utterances < 1) throw std::invalid_argument("make_toy_dataset: need n >= 1");
    std::vector<Eigen::MatrixXd> specs;
    Eigen::Index total = 0;
    const Eigen::Index bins = frame_size / 2 + 1;
    for (int i = 0; i < n_utterances; ++i) {
        const Waveform w = make_toy_utterance(derive_seed(seed, 0x70D5, std::uint64_t(i)));
        Eigen::MatrixXd p = power_spectrogram(stft(w, frame_size, hop));
        total += p.cols();
        specs.push_back(std::move(p));
    }
    Eigen::MatrixXd out(bins, total);
    Eigen::Index at = 0;
    for (const auto& p : specs) {
        out.middleCols(at, p.cols()) = p;
        at += p.cols();
    }
    return out;
}

}  // namespace vemse
