#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace vemse {

struct Waveform {
    std::vector<double> samples;
    int sample_rate = 16000;

    std::size_t size() const { return samples.size(); }
};

// F x N complex STFT coefficients together with the analysis geometry
// (F = frame_size/2 + 1). Columns are time frames.
struct ComplexSpectrogram {
    Eigen::MatrixXcd data;
    int frame_size = 0;
    int hop = 0;

    Eigen::Index bins() const { return data.rows(); }
    Eigen::Index frames() const { return data.cols(); }
};

// Half-cycle sine window, w[n] = sin(pi*(n+0.5)/frame_size).
std::vector<double> sine_window(int frame_size);

// Analysis. The signal is zero-padded with frame_size - hop samples on both
// ends (plus tail alignment), so every input sample gets full window
// coverage. Throws std::invalid_argument on empty input, hop > frame_size,
// odd frame_size, hop not dividing frame_size, or non-finite samples.
ComplexSpectrogram stft(const Waveform& w, int frame_size, int hop);

// Synthesis: windowed overlap-add normalized by the per-sample squared-window
// sum; the edge padding added by stft() is trimmed. stft -> istft is the
// identity (up to rounding) on the original samples. Output may carry up to
// hop-1 trailing samples from frame alignment; callers trim to a known length.
Waveform istft(const ComplexSpectrogram& s, int sample_rate = 16000);

// Elementwise |.|^2 of the STFT coefficients.
Eigen::MatrixXd power_spectrogram(const ComplexSpectrogram& s);

}  // namespace vemse
