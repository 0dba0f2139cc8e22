#include "vemse/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vemse {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey. Falls back to a quadratic DFT for
// non-power-of-two sizes (only exercised at small test sizes).
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (!is_pow2(n_)) return;
        rev_.resize(n_);
        std::size_t log2n = 0;
        while ((std::size_t(1) << log2n) < n_) ++log2n;
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b)
                if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (log2n - 1 - b);
            rev_[i] = r;
        }
        tw_.resize(n_ / 2);
        for (std::size_t k = 0; k < n_ / 2; ++k) {
            const double a = -2.0 * std::numbers::pi * double(k) / double(n_);
            tw_[k] = cd(std::cos(a), std::sin(a));
        }
    }

    void forward(std::vector<cd>& a) const { run(a, false); }
    void inverse(std::vector<cd>& a) const {
        run(a, true);
        for (auto& v : a) v /= double(n_);
    }

private:
    void run(std::vector<cd>& a, bool inv) const {
        if (!is_pow2(n_)) {
            naive(a, inv);
            return;
        }
        for (std::size_t i = 0; i < n_; ++i)
            if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t step = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < len / 2; ++j) {
                    cd w = tw_[j * step];
                    if (inv) w = std::conj(w);
                    const cd u = a[i + j];
                    const cd v = a[i + j + len / 2] * w;
                    a[i + j] = u + v;
                    a[i + j + len / 2] = u - v;
                }
            }
        }
    }

    void naive(std::vector<cd>& a, bool inv) const {
        std::vector<cd> out(n_, cd(0, 0));
        const double sign = inv ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n_; ++k) {
            for (std::size_t t = 0; t < n_; ++t) {
                const double ang = sign * 2.0 * std::numbers::pi * double(k) * double(t) / double(n_);
                out[k] += a[t] * cd(std::cos(ang), std::sin(ang));
            }
        }
        a = std::move(out);
    }

    std::size_t n_;
    std::vector<std::size_t> rev_;
    std::vector<cd> tw_;
};

void check_geometry(int frame_size, int hop) {
    if (frame_size <= 0 || hop <= 0)
        throw std::invalid_argument("stft: frame_size and hop must be positive");
    if (frame_size % 2 != 0)
        throw std::invalid_argument("stft: frame_size must be even");
    if (hop > frame_size)
        throw std::invalid_argument("stft: hop exceeds frame_size");
    if (frame_size % hop != 0)
        throw std::invalid_argument("stft: hop must divide frame_size");
}

}  // namespace

std::vector<double> sine_window(int frame_size) {
    std::vector<double> w(frame_size);
    for (int n = 0; n < frame_size; ++n)
        w[n] = std::sin(std::numbers::pi * (n + 0.5) / frame_size);
    return w;
}

ComplexSpectrogram stft(const Waveform& wav, int frame_size, int hop) {
    check_geometry(frame_size, hop);
    if (wav.samples.empty()) throw std::invalid_argument("stft: empty input");
    for (double v : wav.samples)
        if (!std::isfinite(v)) throw std::invalid_argument("stft: non-finite sample");

    const std::size_t pad = std::size_t(frame_size - hop);
    const std::size_t padded = wav.samples.size() + 2 * pad;
    std::size_t n_frames = 1;
    if (padded > std::size_t(frame_size))
        n_frames = (padded - frame_size + hop - 1) / hop + 1;
    const std::size_t total = (n_frames - 1) * hop + frame_size;

    std::vector<double> x(total, 0.0);
    std::copy(wav.samples.begin(), wav.samples.end(), x.begin() + pad);

    const auto win = sine_window(frame_size);
    const Fft fft{std::size_t(frame_size)};
    const Eigen::Index bins = frame_size / 2 + 1;

    ComplexSpectrogram out;
    out.frame_size = frame_size;
    out.hop = hop;
    out.data.resize(bins, Eigen::Index(n_frames));

    std::vector<cd> buf(frame_size);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::size_t off = t * hop;
        for (int n = 0; n < frame_size; ++n) buf[n] = cd(x[off + n] * win[n], 0.0);
        fft.forward(buf);
        for (Eigen::Index k = 0; k < bins; ++k) out.data(k, Eigen::Index(t)) = buf[k];
    }
    return out;
}

Waveform istft(const ComplexSpectrogram& s, int sample_rate) {
    const int frame_size = s.frame_size;
    const int hop = s.hop;
    check_geometry(frame_size, hop);
    if (s.data.rows() != frame_size / 2 + 1)
        throw std::invalid_argument("istft: row count inconsistent with frame_size");
    if (s.data.cols() < 1) throw std::invalid_argument("istft: no frames");

    const std::size_t n_frames = std::size_t(s.data.cols());
    const std::size_t total = (n_frames - 1) * hop + frame_size;
    const std::size_t pad = std::size_t(frame_size - hop);

    const auto win = sine_window(frame_size);
    const Fft fft{std::size_t(frame_size)};

    std::vector<double> acc(total, 0.0);
    std::vector<double> wsum(total, 0.0);
    std::vector<cd> buf(frame_size);
    for (std::size_t t = 0; t < n_frames; ++t) {
        // rebuild the full conjugate-symmetric spectrum from the F kept bins
        for (int k = 0; k <= frame_size / 2; ++k) buf[k] = s.data(k, Eigen::Index(t));
        for (int k = frame_size / 2 + 1; k < frame_size; ++k)
            buf[k] = std::conj(s.data(frame_size - k, Eigen::Index(t)));
        fft.inverse(buf);
        const std::size_t off = t * hop;
        for (int n = 0; n < frame_size; ++n) {
            acc[off + n] += buf[n].real() * win[n];
            wsum[off + n] += win[n] * win[n];
        }
    }

    if (total < 2 * pad) throw std::invalid_argument("istft: fewer samples than edge padding");
    Waveform out;
    out.sample_rate = sample_rate;
    out.samples.resize(total - 2 * pad);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const std::size_t j = i + pad;
        out.samples[i] = acc[j] / wsum[j];
    }
    return out;
}

Eigen::MatrixXd power_spectrogram(const ComplexSpectrogram& s) { return s.data.cwiseAbs2(); }

}  // namespace vemse
