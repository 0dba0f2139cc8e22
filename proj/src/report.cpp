#include "vemse/report.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace vemse {

std::string to_string(Method m) {
    switch (m) {
        case Method::vem: return "vem";
        case Method::mcem: return "mcem";
        case Method::heuristic: return "heuristic";
    }
    return "?";
}

std::string to_string(ReconMode m) {
    switch (m) {
        case ReconMode::mh: return "mh";
        case ReconMode::s: return "s";
        case ReconMode::z: return "z";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "vem") return Method::vem;
    if (s == "mcem") return Method::mcem;
    if (s == "heuristic") return Method::heuristic;
    throw std::invalid_argument("unknown method: " + s);
}

ReconMode recon_from_string(const std::string& s) {
    if (s == "mh") return ReconMode::mh;
    if (s == "s") return ReconMode::s;
    if (s == "z") return ReconMode::z;
    throw std::invalid_argument("unknown reconstruction mode: " + s);
}

void EngineConfig::validate() const {
    if (K < 1) throw std::invalid_argument("config: K must be >= 1");
    if (D < 1) throw std::invalid_argument("config: D must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
    if (mh.n_iters < 1) throw std::invalid_argument("config: mh.n_iters must be >= 1");
    if (mh.keep_last < 1 || mh.keep_last > mh.n_iters)
        throw std::invalid_argument("config: mh.keep_last must be in [1, mh.n_iters]");
    if (!(mh.eps2 > 0.0)) throw std::invalid_argument("config: mh.eps2 must be positive");
}

std::string EnhanceReport::to_jsonl() const {
    using nlohmann::json;
    std::string out;
    for (std::size_t i = 0; i < iters.size(); ++i) {
        json rec;
        rec["iter"] = i + 1;
        rec["cost"] = iters[i].cost;
        rec["ms"] = iters[i].ms;
        if (std::isfinite(iters[i].si_sdr)) rec["si_sdr"] = iters[i].si_sdr;
        out += rec.dump();
        out += '\n';
    }
    json fin;
    fin["method"] = to_string(method);
    fin["iterations"] = iterations;
    if (std::isfinite(final_si_sdr)) fin["final_si_sdr"] = final_si_sdr;
    fin["config"] = {
        {"K", config.K},           {"D", config.D},
        {"max_iters", config.max_iters}, {"tol", config.tol},
        {"seed", config.seed},     {"mh_iters", config.mh.n_iters},
        {"mh_keep", config.mh.keep_last}, {"mh_eps2", config.mh.eps2},
    };
    out += fin.dump();
    out += '\n';
    return out;
}

}  // namespace vemse
