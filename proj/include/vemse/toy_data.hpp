#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "vemse/dsp.hpp"

namespace vemse {

enum class NoiseKind { white, ar1 };

// Synthetic "speech": a stack of 2-5 harmonics of a random fundamental with
// slow per-partial amplitude modulation, plus a low-level AR(2) noise floor,
// 1-3 s at 16 kHz, RMS-normalized. Fully determined by the seed.
Waveform make_toy_utterance(std::uint64_t seed, int sample_rate = 16000);

// Stationary noise of the given length: white Gaussian or AR(1)-colored,
// unit RMS.
Waveform make_stationary_noise(std::uint64_t seed, std::size_t n_samples, int sample_rate = 16000,
                               NoiseKind kind = NoiseKind::white);

// Power-spectrum frames of n_utterances toy utterances pooled into one
// F x M matrix (the training set format).
Eigen::MatrixXd make_toy_dataset(std::uint64_t seed, int n_utterances, int frame_size = 1024,
                                 int hop = 256);

}  // namespace vemse
