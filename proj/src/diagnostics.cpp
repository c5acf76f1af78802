#include <algorithm>
#include <cmath>
#include <numbers>

#include "field_kernels.hpp"
#include "kaa/sampling.hpp"
#include "kaa/sim.hpp"

namespace kaa {

namespace {

void ensure_cache(SimState& st, const Params& p) {
    if (st.ens.cache_t != st.time()) st.ens.refresh(st.time(), p);
}

double bracket4(double r) { return std::sqrt(4.0 + r * r); }

// Largest pairwise distance among the points.
double diameter(const std::vector<Vec3>& pts) {
    double d = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
    return d;
}

}  // namespace

Vec3 field_at_charge(const ParticleEnsemble& ens) {
    if (ens.size() == 0) return Vec3::Zero();
    return efield_batch({Vec3::Zero()}, ens.x, ens.w, 0.0)[0];
}

EnergyMomentum energy_momentum(SimState& st, const SimConfig& cfg) {
    const Params& p = cfg.params;
    ensure_cache(st, p);
    const ParticleEnsemble& ens = st.ens;
    const Vec3 V = st.charge.V;
    EnergyMomentum em;
    double kin = 0, ugc = 0, pscale = 0;
    Vec3 P = Vec3::Zero();
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Vec3 vp = ens.v[i] + V;
        kin += ens.w[i] * vp.squaredNorm();
        ugc += ens.w[i] / ens.x[i].norm();
        P += ens.w[i] * vp;
        pscale += ens.w[i] * vp.norm();
    }
    double ugg = 0;
    if (p.Q != 0 && ens.size() > 1) {
        std::vector<double> xs(ens.size()), ys(ens.size()), zs(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i) {
            xs[i] = ens.x[i][0];
            ys[i] = ens.x[i][1];
            zs[i] = ens.x[i][2];
        }
        kernels::Sources src{xs.data(), ys.data(), zs.data(), ens.w.data(), ens.size()};
        ugg = p.mg * p.Q / (4 * std::numbers::pi) * kernels::pair_potential_sum(src, cfg.eps * cfg.eps);
    }
    // Mechanical energy: each kinetic term is m|v|^2 in the units where a gas
    // particle alone conserves |v|^2 + q/|y|.
    em.energy = p.mg * kin + p.Mc * V.squaredNorm() + 2 * ugg + p.mg * p.q * ugc;
    em.momentum = p.mg * P + p.Mc * V;
    em.momentum_scale = p.mg * pscale + p.Mc * V.norm();
    return em;
}

std::vector<double> relative_energies(SimState& st, const SimConfig& cfg) {
    ensure_cache(st, cfg.params);
    std::vector<double> e(st.ens.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = st.ens.v[i].squaredNorm() + cfg.params.q / st.ens.x[i].norm();
    return e;
}

std::vector<Vec3> probe_points(double t) {
    // Origin plus 16 Fibonacci directions at four radii, scaled with max(t, 1).
    const double scale = std::max(t, 1.0);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> pts{Vec3::Zero()};
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
        for (int k = 0; k < 16; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / 16.0;
            const double rho = std::sqrt(1.0 - z * z), phi = golden * k;
            pts.emplace_back(r * scale * Vec3(rho * std::cos(phi), rho * std::sin(phi), z));
        }
    }
    return pts;
}

MomentProxies moment_proxies(const ParticleEnsemble& ens, const Params& p) {
    MomentProxies m;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const SICCoords c = to_sic({ens.theta[i], ens.a[i], Branch::plus}, p);
        const double g = ens.gamma[i];
        const double a = ens.a[i].norm();
        m.a = std::max(m.a, (4 + a * a) * g);
        m.xi = std::max(m.xi, (4 + c.xi * c.xi) * g);
        m.lambda = std::max(m.lambda, (4 + c.lambda() * c.lambda()) * g);
        m.eta = std::max(m.eta, bracket4(c.eta) * g);
    }
    return m;
}

DiagnosticsRecord diagnose(SimState& st, const SimConfig& cfg) {
    const Params& p = cfg.params;
    ensure_cache(st, p);
    DiagnosticsRecord r;
    const double t = st.time();
    r.t = t;
    const std::vector<Vec3> probes = probe_points(t);
    const std::vector<Vec3> E = efield_batch(probes, st.ens.x, st.ens.w, cfg.eps);
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const double e = E[k].norm();
        r.supE = std::max(r.supE, e);
        r.supE_proxy = std::max(r.supE_proxy, (t * t + probes[k].squaredNorm()) * e);
    }
    r.moments = moment_proxies(st.ens, p);
    const EnergyMomentum em = energy_momentum(st, cfg);
    r.energy = em.energy;
    r.momentum = em.momentum;
    r.Xc = st.charge.X;
    r.Vc = st.charge.V;
    r.Ec = field_at_charge(st.ens);
    // V(t) - V_inf = -Qc int_t^inf E(0,s) ds, and E(0,s) ~ E_inf(0)/s^2 gives -Qc t E(0,t).
    st.charge.W = -p.Qc * t * r.Ec;
    st.charge.Vinf_est = st.charge.V - st.charge.W;
    r.W = st.charge.W;
    if (st.theta_initial.size() == st.ens.size() && st.ens.size() > 0) {
        std::vector<double> d(st.ens.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = (st.ens.theta[i] - st.theta_initial[i]).norm();
        r.drift_max = *std::max_element(d.begin(), d.end());
        std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
        r.drift_median = d[d.size() / 2];
    }
    return r;
}

ChargeFit charge_asymptotics(const std::vector<DiagnosticsRecord>& records, double t_lo, double t_hi,
                             const Vec3& Einf0, const Params& p) {
    std::vector<const DiagnosticsRecord*> sel;
    for (const auto& r : records)
        if (r.t >= t_lo - 1e-9 && r.t <= t_hi + 1e-9 && r.t > 0) sel.push_back(&r);
    if (sel.size() < 3) throw SimError("charge fit: fewer than 3 records in the window");
    double tmin = INFINITY, tmax = 0;
    for (auto* r : sel) {
        tmin = std::min(tmin, r->t);
        tmax = std::max(tmax, r->t);
    }
    if (tmax < 1.5 * tmin) throw SimError("charge fit: window too narrow to separate 1 and 1/t");

    Eigen::MatrixXd A(sel.size(), 2);
    Eigen::MatrixXd B(sel.size(), 3);
    for (std::size_t k = 0; k < sel.size(); ++k) {
        A(k, 0) = 1.0;
        A(k, 1) = 1.0 / sel[k]->t;
        B.row(k) = sel[k]->Vc.transpose();
    }
    const Eigen::MatrixXd X = A.colPivHouseholderQr().solve(B);
    ChargeFit f;
    f.points = sel.size();
    f.Vinf = X.row(0).transpose();
    f.coeff = X.row(1).transpose();
    const Eigen::MatrixXd resid = A * X - B;
    const Eigen::MatrixXd centred = B.rowwise() - B.colwise().mean();
    const double cn = centred.norm();
    f.rel_residual = cn > 0 ? resid.norm() / cn : resid.norm();
    f.predicted = -p.Qc * Einf0;
    const double pn = f.predicted.norm();
    f.rel_error = pn > 0 ? (f.coeff - f.predicted).norm() / pn : f.coeff.norm();
    return f;
}

DriftReport scattering_drift(const std::vector<AngleSnapshot>& snaps, const std::vector<Vec3>& Einf_a,
                             const Vec3& Einf0, const Params& p, bool derived_sign, bool bulk_only) {
    DriftReport rep;
    rep.derived_sign = derived_sign;
    if (snaps.empty()) return rep;
    const AngleSnapshot& last = snaps.back();
    const double T = last.t;
    std::vector<const AngleSnapshot*> win;
    for (const auto& s : snaps)
        if (s.t >= T / 2 - 1e-9) win.push_back(&s);
    const std::size_t n = last.theta.size();
    rep.particles = n;
    std::vector<double> ratios;
    std::vector<Vec3> raw(win.size()), corr(win.size());
    for (std::size_t i = 0; i < n; ++i) {
        const bool b = in_bulk({last.theta[i], last.a[i], Branch::plus}, T, p);
        if (b) ++rep.bulk;
        if (bulk_only && !b) continue;
        const Vec3 shift = derived_sign ? Vec3(p.Q * Einf_a[i] - p.Qc * Einf0)
                                        : Vec3(-(p.Q * Einf_a[i] + p.Qc * Einf0));
        for (std::size_t k = 0; k < win.size(); ++k) {
            raw[k] = win[k]->theta[i];
            corr[k] = raw[k] + std::log(win[k]->t) * shift;
        }
        const double du = diameter(raw), dc = diameter(corr);
        if (dc <= 0.5 * du) ++rep.improved;
        ratios.push_back(du > 0 ? dc / du : (dc > 0 ? INFINITY : 0.0));
    }
    rep.considered = ratios.size();
    if (!ratios.empty()) {
        rep.fraction = static_cast<double>(rep.improved) / static_cast<double>(ratios.size());
        std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
        rep.median_ratio = ratios[ratios.size() / 2];
    }
    return rep;
}

}  // namespace kaa
