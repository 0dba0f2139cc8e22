#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace vemse {

enum class Method { vem, mcem, heuristic };
enum class ReconMode { mh, s, z };

std::string to_string(Method m);
std::string to_string(ReconMode m);
Method method_from_string(const std::string& s);
ReconMode recon_from_string(const std::string& s);

struct MhConfig {
    int n_iters = 100;
    int keep_last = 25;
    double eps2 = 0.01;
};

struct EngineConfig {
    Method method = Method::vem;
    int K = 10;        // NMF rank
    int D = 1;         // latent samples (VEM) / kept samples R (MCEM)
    int max_iters = 200;
    double tol = 1e-4;  // relative change of the speech posterior power
    std::uint64_t seed = 0;
    MhConfig mh;

    void validate() const;  // throws std::invalid_argument
};

struct IterationRecord {
    double cost = 0.0;    // free-energy surrogate (VEM) / MC objective (MCEM)
    double ms = 0.0;      // wall-clock of the update step
    double si_sdr = std::numeric_limits<double>::quiet_NaN();  // when traced
};

struct EnhanceReport {
    Method method = Method::vem;
    EngineConfig config;
    int iterations = 0;
    std::vector<IterationRecord> iters;
    double final_si_sdr = std::numeric_limits<double>::quiet_NaN();

    // One JSON record per iteration plus a closing summary record.
    std::string to_jsonl() const;
};

}  // namespace vemse
