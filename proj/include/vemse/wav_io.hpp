#pragma once

#include <string>

#include "vemse/dsp.hpp"

namespace vemse {

enum class WavFormat { pcm16, float32 };

// Mono 16-bit PCM or 32-bit IEEE float RIFF/WAVE. Anything else (stereo,
// other codecs, malformed chunks) is rejected with std::runtime_error.
// PCM samples are scaled to [-1, 1) by 1/32768.
Waveform read_wav(const std::string& path);

// expected_rate > 0 additionally rejects files whose sample rate differs
// (resampling is out of scope).
Waveform read_wav(const std::string& path, int expected_rate);

void write_wav(const std::string& path, const Waveform& w, WavFormat fmt = WavFormat::float32);

}  // namespace vemse
