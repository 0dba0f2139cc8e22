#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vemse/metrics.hpp"
#include "vemse/rng.hpp"
#include "vemse/toy_data.hpp"

using namespace vemse;

namespace {

Waveform random_wave(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Waveform w;
    w.samples.resize(n);
    for (auto& v : w.samples) v = rng.uniform(-1.0, 1.0);
    return w;
}

}  // namespace

TEST_CASE("si_sdr caps and scale invariance") {
    const Waveform ref = random_wave(4000, 1);
    CHECK(si_sdr(ref, ref) == 100.0);

    Waveform scaled = ref;
    for (auto& v : scaled.samples) v *= 2.0;
    CHECK(si_sdr(ref, scaled) == 100.0);

    Waveform noisy = ref;
    Rng rng(2);
    for (auto& v : noisy.samples) v += 0.01 * rng.gauss();
    const double base = si_sdr(ref, noisy);
    for (double c : {0.5, 3.0, 42.0}) {
        Waveform e = noisy;
        for (auto& v : e.samples) v *= c;
        CHECK(si_sdr(ref, e) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("si_sdr of orthogonal noise at 10:1 power is exactly 10 dB") {
    Waveform ref, est;
    const std::size_t n = 4000;
    ref.samples.resize(n);
    est.samples.resize(n);
    // [1,1,-1,-1] carrier vs [1,-1,1,-1] disturbance: orthogonal over full periods
    const double g = std::sqrt(0.1);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i % 4 < 2) ? 1.0 : -1.0;
        const double d = (i % 2 == 0) ? 1.0 : -1.0;
        ref.samples[i] = r;
        est.samples[i] = r + g * d;
    }
    CHECK(si_sdr(ref, est) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("si_sdr error cases") {
    Waveform ref = random_wave(100, 3), est = random_wave(99, 4);
    CHECK_THROWS_AS(si_sdr(ref, est), std::invalid_argument);
    Waveform zero;
    zero.samples.assign(100, 0.0);
    Waveform any = random_wave(100, 5);
    CHECK_THROWS_AS(si_sdr(zero, any), std::invalid_argument);
}

TEST_CASE("mix_at_snr hits the requested power ratio exactly") {
    const Waveform s = make_toy_utterance(7);
    const Waveform n = make_stationary_noise(8, s.size());

    for (double snr : {0.0, 10.0, -5.0}) {
        const auto [mix, scaled] = mix_at_snr(s, n, snr);
        double ps = 0.0, pn = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            ps += s.samples[i] * s.samples[i];
            pn += scaled.samples[i] * scaled.samples[i];
        }
        CHECK(10.0 * std::log10(ps / pn) == doctest::Approx(snr).epsilon(1e-12));
        if (snr == 10.0) CHECK(ps / pn == doctest::Approx(10.0).epsilon(1e-12));

        // additivity: recover the speech up to one rounding of the sum
        double max_err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            max_err = std::max(max_err,
                               std::abs(mix.samples[i] - scaled.samples[i] - s.samples[i]));
            scale = std::max({scale, std::abs(s.samples[i]), std::abs(scaled.samples[i])});
        }
        CHECK(max_err <= 4.0 * std::numeric_limits<double>::epsilon() * scale);
    }

    Waveform zero;
    zero.samples.assign(s.size(), 0.0);
    CHECK_THROWS_AS(mix_at_snr(zero, n, 0.0), std::invalid_argument);
}

TEST_CASE("time_iterations applies the 0.5 dB rule") {
    EnhanceReport rep;
    auto add = [&](double sdr, double ms) {
        IterationRecord r;
        r.si_sdr = sdr;
        r.ms = ms;
        rep.iters.push_back(r);
    };

    SUBCASE("synthetic trace reaching final at the third entry") {
        for (double v : {0.0, 5.0, 9.6, 10.0, 10.0}) add(v, 2.0);
        const auto s = time_iterations(rep);
        CHECK(s.iters_to_tol == 3);
        CHECK(s.mean_ms_per_iter == doctest::Approx(2.0));
    }

    SUBCASE("constant trace converges immediately") {
        for (int i = 0; i < 4; ++i) add(7.0, 1.0);
        CHECK(time_iterations(rep).iters_to_tol == 1);
    }

    SUBCASE("monotone trace reaching final at iteration 7") {
        for (double v : {0.0, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 10.0, 10.0}) add(v, 1.0);
        CHECK(time_iterations(rep).iters_to_tol <= 7);
    }

    SUBCASE("no trace yields zero") {
        rep.iters.clear();
        IterationRecord r;
        r.ms = 3.0;
        rep.iters.push_back(r);
        CHECK(time_iterations(rep).iters_to_tol == 0);
    }
}
