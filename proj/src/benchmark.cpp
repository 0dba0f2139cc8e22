#include "vemse/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "vemse/rng.hpp"

namespace vemse {

namespace {

constexpr std::uint64_t kTagBenchSpeech = 0xBE5C;
constexpr std::uint64_t kTagBenchNoise = 0xBE11;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Trims a synthesis result to the mixture length so SI-SDR is well defined.
Waveform to_waveform(const ComplexSpectrogram& s, std::size_t len, int rate) {
    Waveform w = istft(s, rate);
    if (w.samples.size() < len)
        throw std::runtime_error("benchmark: synthesis shorter than input");
    w.samples.resize(len);
    return w;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BenchmarkResult run_benchmark(const VaeModel& model, const BenchmarkConfig& cfg) {
    if (cfg.n_utterances < 1) throw std::invalid_argument("benchmark: need utterances");
    if (cfg.runs.empty()) throw std::invalid_argument("benchmark: no runs configured");
    cfg.base.validate();

    BenchmarkResult result;
    const int rate = 16000;

    for (int u = 0; u < cfg.n_utterances; ++u) {
        const Waveform speech =
            make_toy_utterance(derive_seed(cfg.base.seed, kTagBenchSpeech, std::uint64_t(u)), rate);
        const Waveform noise = make_stationary_noise(
            derive_seed(cfg.base.seed, kTagBenchNoise, std::uint64_t(u)), speech.size(), rate,
            cfg.noise);
        const auto [mixture, scaled_noise] = mix_at_snr(speech, noise, cfg.snr_db);
        const double input_sdr = si_sdr(speech, mixture);

        const ComplexSpectrogram x = stft(mixture, cfg.frame_size, cfg.hop);
        const std::size_t len = mixture.size();

        const IterObserver observer = [&](const Eigen::MatrixXcd& s_hat) {
            ComplexSpectrogram est = x;
            est.data = s_hat;
            return si_sdr(speech, to_waveform(est, len, rate));
        };

        for (const auto& run : cfg.runs) {
            EngineConfig ec = cfg.base;
            ec.method = run.method;
            ec.D = run.D;

            auto emit = [&](ReconMode mode, const ComplexSpectrogram& s_hat,
                            const EnhanceReport& report) {
                BenchRow row;
                row.method = to_string(run.method);
                row.D = run.D;
                row.mode = to_string(mode);
                row.utterance = u;
                row.si_sdr = si_sdr(speech, to_waveform(s_hat, len, rate));
                row.iters = report.iterations;
                const IterTimingSummary ts = time_iterations(report);
                row.ms_per_iter = ts.mean_ms_per_iter;
                row.iters_to_tol = ts.iters_to_tol;
                row.input_si_sdr = input_sdr;
                result.rows.push_back(std::move(row));
            };

            if (run.method == Method::mcem) {
                const McemResult r = run_mcem(x, model, ec, observer);
                emit(ReconMode::mh, reconstruct_from_samples(x, r.samples, r.nmf, model),
                     r.report);
            } else {
                const VemResult r = run_vem(x, model, ec, observer);
                for (ReconMode mode : cfg.modes)
                    emit(mode, reconstruct(x, r.state, r.nmf, model, mode, ec), r.report);
            }
        }
    }

    std::sort(result.rows.begin(), result.rows.end(), [](const BenchRow& a, const BenchRow& b) {
        return std::tie(a.method, a.D, a.mode, a.utterance) <
               std::tie(b.method, b.D, b.mode, b.utterance);
    });

    // group summaries
    std::map<std::tuple<std::string, int, std::string>, std::vector<const BenchRow*>> groups;
    for (const auto& row : result.rows) groups[{row.method, row.D, row.mode}].push_back(&row);
    for (const auto& [key, rows] : groups) {
        BenchSummaryRow s;
        s.method = std::get<0>(key);
        s.D = std::get<1>(key);
        s.mode = std::get<2>(key);
        std::vector<double> sdr, impr, iters_tol;
        double ms = 0.0;
        for (const BenchRow* r : rows) {
            sdr.push_back(r->si_sdr);
            impr.push_back(r->si_sdr - r->input_si_sdr);
            iters_tol.push_back(double(r->iters_to_tol));
            ms += r->ms_per_iter;
        }
        s.median_si_sdr = median(sdr);
        s.median_improvement = median(impr);
        s.mean_ms_per_iter = ms / double(rows.size());
        s.median_iters_to_tol = median(iters_tol);
        result.summary.push_back(std::move(s));
    }

    // MCEM vs VEM per-iteration cost ratio (mh rows carry the run timing)
    double vem_ms = -1.0, mcem_ms = -1.0;
    for (const auto& s : result.summary) {
        if (s.method == "vem" && s.mode == "mh" && vem_ms < 0.0) vem_ms = s.mean_ms_per_iter;
        if (s.method == "mcem" && s.mode == "mh" && mcem_ms < 0.0) mcem_ms = s.mean_ms_per_iter;
    }
    if (vem_ms > 0.0 && mcem_ms > 0.0) result.mcem_vem_time_ratio = mcem_ms / vem_ms;
    return result;
}

std::string rows_to_csv(const std::vector<BenchRow>& rows) {
    std::string out = "method,D,mode,utterance,si_sdr,iters,ms_per_iter,iters_to_tol\n";
    for (const auto& r : rows) {
        out += r.method + "," + std::to_string(r.D) + "," + r.mode + "," +
               std::to_string(r.utterance) + "," + fmt(r.si_sdr) + "," + std::to_string(r.iters) +
               "," + fmt(r.ms_per_iter) + "," + std::to_string(r.iters_to_tol) + "\n";
    }
    return out;
}

std::string summary_to_csv(const BenchmarkResult& result) {
    std::string out =
        "method,D,mode,median_si_sdr,median_improvement,mean_ms_per_iter,median_iters_to_tol\n";
    for (const auto& s : result.summary) {
        out += s.method + "," + std::to_string(s.D) + "," + s.mode + "," + fmt(s.median_si_sdr) +
               "," + fmt(s.median_improvement) + "," + fmt(s.mean_ms_per_iter) + "," +
               fmt(s.median_iters_to_tol) + "\n";
    }
    if (std::isfinite(result.mcem_vem_time_ratio))
        out += "mcem_vem_time_ratio,,," + fmt(result.mcem_vem_time_ratio) + ",,,\n";
    return out;
}

}  // namespace vemse
