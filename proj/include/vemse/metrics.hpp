#pragma once

#include <utility>

#include "vemse/dsp.hpp"
#include "vemse/report.hpp"

namespace vemse {

struct SdrResult {
    double si_sdr_db = 0.0;
    double input_si_sdr_db = 0.0;
    double improvement_db = 0.0;
};

// Scale-invariant SDR: project the estimate onto the reference
// (alpha = <e,r>/<r,r>) and return 10 log10(|alpha r|^2 / |e - alpha r|^2),
// clamped to [-100, 100] dB. Throws on length mismatch or zero-energy
// reference.
double si_sdr(const Waveform& reference, const Waveform& estimate);

// Scales the noise so that 10 log10(P_speech/P_noise) = snr_db exactly and
// returns (speech + scaled_noise, scaled_noise).
std::pair<Waveform, Waveform> mix_at_snr(const Waveform& speech, const Waveform& noise,
                                         double snr_db);

struct IterTimingSummary {
    double mean_ms_per_iter = 0.0;
    // first iteration (1-based) whose traced SI-SDR is within 0.5 dB of the
    // final value; 0 when the report carries no SI-SDR trace
    int iters_to_tol = 0;
};

IterTimingSummary time_iterations(const EnhanceReport& report);

}  // namespace vemse
