#include "kaa/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace kaa {

namespace {

nlohmann::json vec(const Vec3& v) { return {v[0], v[1], v[2]}; }

nlohmann::json drift_json(const DriftReport& d) {
    return {{"particles", d.particles}, {"bulk", d.bulk},         {"considered", d.considered},
            {"improved", d.improved},   {"fraction", d.fraction}, {"median_ratio", d.median_ratio}};
}

double log2sq(double t) {
    const double l = std::log(2 + t);
    return l * l;
}

}  // namespace

SlopeFit loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    SlopeFit f;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo - 1e-9 || t[k] > t_hi + 1e-9 || !(y[k] > 0) || !(t[k] > 0)) continue;
        const double lx = std::log(t[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++f.points;
    }
    if (f.points < 2) return f;
    const double n = static_cast<double>(f.points);
    const double den = n * sxx - sx * sx;
    if (!(den > 0)) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

MomentTrend moment_trend(const std::vector<DiagnosticsRecord>& rec) {
    MomentTrend m;
    if (rec.empty()) return m;
    const MomentProxies& m0 = rec.front().moments;
    const MomentProxies& m1 = rec.back().moments;
    m.a_ratio = m0.a > 0 ? m1.a / m0.a : 0;
    m.xi_ratio = m0.xi > 0 ? m1.xi / m0.xi : 0;
    const double T = rec.back().t;
    for (const DiagnosticsRecord& r : rec) {
        const double l = r.moments.lambda / log2sq(r.t), e = r.moments.eta / log2sq(r.t);
        m.lambda_c = std::max(m.lambda_c, l);
        m.eta_c = std::max(m.eta_c, e);
        if (r.t <= T / 2) {
            m.lambda_early = std::max(m.lambda_early, l);
            m.eta_early = std::max(m.eta_early, e);
        } else {
            m.lambda_late = std::max(m.lambda_late, l);
            m.eta_late = std::max(m.eta_late, e);
        }
    }
    m.pass = m.a_ratio <= 2 && m.xi_ratio <= 2 && m.lambda_late <= 2 * m.lambda_early &&
             m.eta_late <= 2 * m.eta_early;
    return m;
}

ProxyTrend proxy_trend(const std::vector<DiagnosticsRecord>& rec) {
    ProxyTrend p;
    if (rec.empty()) return p;
    const double T = rec.back().t;
    bool first = true;
    double prev = 0;
    p.monotone = true;
    for (const DiagnosticsRecord& r : rec) {
        if (r.t < T / 10 - 1e-9) continue;
        if (first) {
            p.start = r.supE_proxy;
            first = false;
        } else if (r.supE_proxy < prev) {
            p.monotone = false;
        }
        prev = r.supE_proxy;
        p.max = std::max(p.max, r.supE_proxy);
        p.end = r.supE_proxy;
    }
    p.bounded = !p.monotone || p.end <= 1.1 * p.start;
    return p;
}

RunAnalysis analyze_run(const SimConfig& cfg, const SimState& st, const RunResult& res) {
    RunAnalysis A;
    const Params& p = cfg.params;
    A.t_end = res.records.empty() ? 0 : res.records.back().t;
    const double E0 = st.energy0;
    std::vector<double> t, supE;
    for (const DiagnosticsRecord& r : res.records) {
        A.energy_drift = std::max(A.energy_drift, std::abs(r.energy - E0) / std::abs(E0));
        if (st.momentum_scale0 > 0)
            A.momentum_drift = std::max(A.momentum_drift, (r.momentum - st.momentum0).norm() / st.momentum_scale0);
        t.push_back(r.t);
        supE.push_back(r.supE);
    }
    A.field_slope = loglog_slope(t, supE, A.t_end / 10, A.t_end);
    A.proxy = proxy_trend(res.records);
    A.moments = moment_trend(res.records);

    std::vector<ProfileSnapshot> window;
    for (const AngleSnapshot& s : res.snapshots) window.push_back(s.profile());
    try {
        A.Einf0 = asymptotic_profile_at(window, Vec3::Zero(), cfg.eps);
        A.have_profile = true;
    } catch (const WindowError& e) {
        A.profile_error = e.what();
    }
    try {
        A.fit = charge_asymptotics(res.records, A.t_end / 10, A.t_end, A.Einf0, p);
        A.have_fit = true;
        if (!A.have_profile) A.fit.rel_error = NAN;  // nothing to compare against
    } catch (const SimError& e) {
        A.fit_error = e.what();
    }
    if (A.have_profile) {
        const std::vector<Vec3> Ea = asymptotic_profile(window, res.snapshots.back().a, cfg.eps);
        A.drift_bulk_derived = scattering_drift(res.snapshots, Ea, A.Einf0, p, true, true);
        A.drift_bulk_literal = scattering_drift(res.snapshots, Ea, A.Einf0, p, false, true);
        A.drift_all_derived = scattering_drift(res.snapshots, Ea, A.Einf0, p, true, false);
        A.drift_all_literal = scattering_drift(res.snapshots, Ea, A.Einf0, p, false, false);
    }
    return A;
}

nlohmann::json RunAnalysis::to_json() const {
    nlohmann::json j;
    j["t_end"] = t_end;
    j["energy_drift"] = energy_drift;
    j["momentum_drift"] = momentum_drift;
    j["field_slope"] = {{"slope", field_slope.slope}, {"points", field_slope.points}};
    j["field_proxy"] = {{"start", proxy.start},
                        {"max", proxy.max},
                        {"end", proxy.end},
                        {"monotone", proxy.monotone},
                        {"bounded", proxy.bounded}};
    j["moments"] = {{"a_ratio", moments.a_ratio},           {"xi_ratio", moments.xi_ratio},
                    {"lambda_c", moments.lambda_c},         {"lambda_early", moments.lambda_early},
                    {"lambda_late", moments.lambda_late},   {"eta_c", moments.eta_c},
                    {"eta_early", moments.eta_early},       {"eta_late", moments.eta_late},
                    {"pass", moments.pass}};
    if (have_profile)
        j["Einf0"] = vec(Einf0);
    else
        j["profile_error"] = profile_error;
    if (have_fit)
        j["charge_fit"] = {{"Vinf", vec(fit.Vinf)},
                           {"coeff", vec(fit.coeff)},
                           {"predicted", vec(fit.predicted)},
                           {"rel_error", fit.rel_error},
                           {"rel_residual", fit.rel_residual},
                           {"points", fit.points}};
    else
        j["charge_fit_error"] = fit_error;
    j["drift"] = {{"bulk_derived", drift_json(drift_bulk_derived)},
                  {"bulk_literal", drift_json(drift_bulk_literal)},
                  {"all_derived", drift_json(drift_all_derived)},
                  {"all_literal", drift_json(drift_all_literal)}};
    return j;
}

}  // namespace kaa
