#include "vemse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vemse {

double si_sdr(const Waveform& reference, const Waveform& estimate) {
    if (reference.size() != estimate.size())
        throw std::invalid_argument("si_sdr: length mismatch");
    if (reference.size() == 0) throw std::invalid_argument("si_sdr: empty signals");

    double rr = 0.0, er = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        rr += reference.samples[i] * reference.samples[i];
        er += estimate.samples[i] * reference.samples[i];
    }
    if (rr <= 0.0) throw std::invalid_argument("si_sdr: zero-energy reference");

    const double alpha = er / rr;
    double target = 0.0, error = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double t = alpha * reference.samples[i];
        const double e = estimate.samples[i] - t;
        target += t * t;
        error += e * e;
    }
    if (error <= 0.0) return 100.0;
    if (target <= 0.0) return -100.0;
    const double db = 10.0 * std::log10(target / error);
    return std::clamp(db, -100.0, 100.0);
}

std::pair<Waveform, Waveform> mix_at_snr(const Waveform& speech, const Waveform& noise,
                                         double snr_db) {
    if (speech.size() != noise.size()) throw std::invalid_argument("mix_at_snr: length mismatch");
    if (speech.size() == 0) throw std::invalid_argument("mix_at_snr: empty signals");
    double ps = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < speech.size(); ++i) {
        ps += speech.samples[i] * speech.samples[i];
        pn += noise.samples[i] * noise.samples[i];
    }
    if (ps <= 0.0 || pn <= 0.0) throw std::invalid_argument("mix_at_snr: zero-energy input");

    // P_speech / P_scaled_noise = 10^(snr/10)
    const double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
    Waveform scaled = noise;
    for (auto& v : scaled.samples) v *= g;
    Waveform mix = speech;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] += scaled.samples[i];
    return {std::move(mix), std::move(scaled)};
}

IterTimingSummary time_iterations(const EnhanceReport& report) {
    IterTimingSummary out;
    if (report.iters.empty()) return out;
    double total = 0.0;
    bool traced = true;
    for (const auto& r : report.iters) {
        total += r.ms;
        traced = traced && std::isfinite(r.si_sdr);
    }
    out.mean_ms_per_iter = total / double(report.iters.size());
    if (traced) {
        const double final_sdr = report.iters.back().si_sdr;
        for (std::size_t i = 0; i < report.iters.size(); ++i) {
            if (report.iters[i].si_sdr >= final_sdr - 0.5) {
                out.iters_to_tol = int(i) + 1;
                break;
            }
        }
    }
    return out;
}

}  // namespace vemse
