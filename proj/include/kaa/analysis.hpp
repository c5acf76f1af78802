#pragma once

#include <string>

#include "json.hpp"
#include "kaa/sim.hpp"

namespace kaa {

struct SlopeFit {
    double slope = 0;
    double intercept = 0;
    std::size_t points = 0;
};
/// Least squares of ln y against ln t over records with t in [t_lo, t_hi] and y > 0.
SlopeFit loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi);

struct MomentTrend {
    double a_ratio = 0;   // final / initial
    double xi_ratio = 0;
    // proxy / ln^2(2+t): sup over the whole run, and over the early and late halves.
    double lambda_c = 0, lambda_early = 0, lambda_late = 0;
    double eta_c = 0, eta_early = 0, eta_late = 0;
    bool pass = false;
};
MomentTrend moment_trend(const std::vector<DiagnosticsRecord>& records);

struct ProxyTrend {
    double start = 0;   // proxy at the start of the last decade
    double max = 0;     // max over the last decade
    double end = 0;
    bool monotone = false;  // nondecreasing through the decade
    bool bounded = false;   // not monotone, or grew by less than 10%
};
ProxyTrend proxy_trend(const std::vector<DiagnosticsRecord>& records);

struct RunAnalysis {
    double t_end = 0;
    double energy_drift = 0;    // max |E - E0| / |E0|
    double momentum_drift = 0;  // max |P - P0| / (mg sum w|v| + Mc|V|) at t = 0
    SlopeFit field_slope;
    ProxyTrend proxy;
    MomentTrend moments;
    bool have_profile = false;
    std::string profile_error;
    Vec3 Einf0 = Vec3::Zero();
    bool have_fit = false;
    std::string fit_error;
    ChargeFit fit;
    DriftReport drift_bulk_derived, drift_bulk_literal, drift_all_derived, drift_all_literal;

    nlohmann::json to_json() const;
};

/// Late window is [t_end/10, t_end]. The field profile averages all snapshots.
RunAnalysis analyze_run(const SimConfig& cfg, const SimState& st, const RunResult& res);

}  // namespace kaa
