#pragma once

#include <string>
#include <vector>

#include "vemse/inference.hpp"
#include "vemse/metrics.hpp"
#include "vemse/toy_data.hpp"

namespace vemse {

struct BenchRunSpec {
    Method method = Method::vem;
    int D = 1;
};

struct BenchmarkConfig {
    int n_utterances = 20;
    double snr_db = 0.0;
    NoiseKind noise = NoiseKind::white;
    std::vector<BenchRunSpec> runs{{Method::vem, 1}};
    std::vector<ReconMode> modes{ReconMode::mh, ReconMode::s, ReconMode::z};
    EngineConfig base;  // K, tol, max_iters, mh, seed
    int frame_size = 1024;
    int hop = 256;
};

struct BenchRow {
    std::string method;
    int D = 0;
    std::string mode;
    int utterance = 0;
    double si_sdr = 0.0;
    int iters = 0;
    double ms_per_iter = 0.0;
    int iters_to_tol = 0;
    double input_si_sdr = 0.0;  // not a CSV column; used for improvement stats
};

struct BenchSummaryRow {
    std::string method;
    int D = 0;
    std::string mode;
    double median_si_sdr = 0.0;
    double median_improvement = 0.0;
    double mean_ms_per_iter = 0.0;
    double median_iters_to_tol = 0.0;
};

struct BenchmarkResult {
    std::vector<BenchRow> rows;  // sorted (method, D, mode, utterance)
    std::vector<BenchSummaryRow> summary;
    // per-iteration cost ratio MCEM/VEM, NaN unless both methods were run
    double mcem_vem_time_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Runs every (method, D) spec over seeded toy mixtures (utterance seeds are
// disjoint from the training-data stream) and reconstructs with each
// requested mode. MCEM rows are emitted for mode mh only.
BenchmarkResult run_benchmark(const VaeModel& model, const BenchmarkConfig& cfg);

// CSV with header method,D,mode,utterance,si_sdr,iters,ms_per_iter,
// iters_to_tol; fixed 6-decimal formatting.
std::string rows_to_csv(const std::vector<BenchRow>& rows);
std::string summary_to_csv(const BenchmarkResult& result);

double median(std::vector<double> values);

}  // namespace vemse
