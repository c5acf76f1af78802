#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "kaa/analysis.hpp"
#include "kaa/sampling.hpp"
#include "kaa/sim.hpp"

using namespace kaa;
using doctest::Approx;

namespace {

SimConfig small_config(std::size_t n, double t_end) {
    SimConfig c;
    c.n = n;
    c.t_end = t_end;
    c.diag_every = 10;
    return c;
}

SimConfig free_config(std::size_t n, double t_end) {
    SimConfig c = small_config(n, t_end);
    c.params.Q = 0;
    c.params.Qc = 0;
    return c;
}

std::vector<Vec3> final_positions(SimConfig cfg) {
    SimState st = init(cfg);
    RunResult r;
    run(st, cfg, r);
    st.ens.refresh(st.time(), cfg.params);
    return st.ens.x;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("single deterministic particle follows the exact orbit") {
    SimConfig cfg = free_config(1, 10.0);
    cfg.charge_v0 = Vec3(0.1, -0.2, 0.0);
    const PhaseState rel{Vec3(2, 1, 0), Vec3(-0.5, 0.2, 0.1)};
    SimState st = init_single(cfg, rel, 1e-3);
    RunResult out;
    run(st, cfg, out);
    st.ens.refresh(st.time(), cfg.params);
    const PhaseState ref = kepler_propagate(rel, 10.0, cfg.params);
    CHECK((st.ens.x[0] - ref.x).norm() < 1e-11 * ref.x.norm());
    CHECK((st.charge.X - 10.0 * cfg.charge_v0).norm() < 1e-12);
}

TEST_CASE("weights and sampler normalization") {
    SimConfig cfg = small_config(400, 0.0);
    const SimState st = init(cfg);
    CHECK(st.ens.total_weight() == Approx(cfg.sampler.amplitude * cfg.sampler.amplitude).epsilon(1e-12));
    for (double g : st.ens.gamma) CHECK(g > 0);

    // Midpoint quadrature of the Gaussian density on a 6-d grid.
    const SamplerSpec& s = cfg.sampler;
    const int m = 12;
    double total = 0;
    const double hx = 12 * s.widths[0] / m, hv = 12 * s.widths[1] / m;
    for (int i = 0; i < m * m * m; ++i) {
        const Vec3 x = s.center_x + Vec3(-6 * s.widths[0] + hx * (i % m + 0.5),
                                         -6 * s.widths[0] + hx * ((i / m) % m + 0.5),
                                         -6 * s.widths[0] + hx * (i / (m * m) + 0.5));
        for (int j = 0; j < m * m * m; ++j) {
            const Vec3 v = s.center_v + Vec3(-6 * s.widths[1] + hv * (j % m + 0.5),
                                             -6 * s.widths[1] + hv * ((j / m) % m + 0.5),
                                             -6 * s.widths[1] + hv * (j / (m * m) + 0.5));
            total += sampler_density(s, x, v);
        }
    }
    total *= std::pow(hx * hv, 3);
    CHECK(total == Approx(1.0).epsilon(1e-6));

    // Shell: radial part by quadrature in r, velocity part integrates to one.
    SamplerSpec sh = s;
    sh.type = "shell";
    double rad = 0;
    const int mr = 20000;
    const double R = sh.center_x.norm(), rmax = R + 10 * sh.widths[0];
    for (int k = 0; k < mr; ++k) {
        const double r = rmax * (k + 0.5) / mr;
        const Vec3 x = r * Vec3(0, 0.6, 0.8);
        const Vec3 v = sh.center_v.norm() * x / r;  // velocity density peak
        const double peak = std::pow(2 * std::numbers::pi * sh.widths[1] * sh.widths[1], -1.5);
        rad += sampler_density(sh, x, v) / peak * 4 * std::numbers::pi * r * r;
    }
    CHECK(rad * rmax / mr == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("draws near the charge are rejected") {
    SimConfig cfg = small_config(50, 0.0);
    cfg.sampler.center_x = Vec3::Zero();
    cfg.sampler.widths[0] = 1e-3;
    cfg.sampler.r_min_floor = 1.0;
    CHECK_THROWS_AS(init(cfg), DomainError);
}

TEST_CASE("mirror-symmetric gas leaves the charge at rest") {
    SimConfig cfg = small_config(1, 5.0);
    SimState st;
    st.dt = cfg.dt;
    Rng rng(41);
    for (int i = 0; i < 16; ++i) {
        const PhaseState s = sample_phase(rng, cfg.params);
        // All eight reflections through the coordinate planes.
        for (int m = 0; m < 8; ++m) {
            Vec3 f(m & 1 ? -1 : 1, m & 2 ? -1 : 1, m & 4 ? -1 : 1);
            const PhaseState r{s.x.cwiseProduct(f), s.v.cwiseProduct(f)};
            const ActionAngle aa = angle(r, cfg.params);
            st.ens.push(aa.theta, aa.a, 1e-3, 1.0);
        }
    }
    st.ens.refresh(0, cfg.params);
    RunResult out;
    run(st, cfg, out);
    CHECK(st.charge.V.norm() < 1e-15);
    CHECK(st.charge.X.norm() < 1e-14);
}

TEST_CASE("no mean field: per-particle energy is conserved to round-off") {
    SimConfig cfg = free_config(50, 200.0);
    cfg.dt = 0.02;  // 1e4 steps
    cfg.diag_every = 10000;
    SimState st = init(cfg);
    const std::vector<double> e0 = relative_energies(st, cfg);
    RunResult out;
    run(st, cfg, out);
    REQUIRE(st.steps == 10000);
    const std::vector<double> e1 = relative_energies(st, cfg);
    double worst = 0;
    for (std::size_t i = 0; i < e0.size(); ++i) worst = std::max(worst, std::abs(e1[i] - e0[i]) / e0[i]);
    CHECK(worst < 1e-12);
    // Angles are frozen in the pulled-back frame.
    CHECK(out.records.back().drift_max == 0.0);
}

TEST_CASE("second order in dt") {
    SimConfig cfg = small_config(100, 10.0);
    std::vector<std::vector<Vec3>> xs;
    for (double dt : {0.02, 0.01, 0.005}) {
        cfg.dt = dt;
        cfg.diag_every = 1000;
        xs.push_back(final_positions(cfg));
    }
    double d1 = 0, d2 = 0;
    for (std::size_t i = 0; i < xs[0].size(); ++i) {
        d1 += (xs[0][i] - xs[1][i]).squaredNorm();
        d2 += (xs[1][i] - xs[2][i]).squaredNorm();
    }
    const double ratio = std::sqrt(d1 / d2);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("momentum and energy on a short run") {
    SimConfig cfg = small_config(300, 10.0);
    cfg.sampler.amplitude = 0.3;
    SimState st = init(cfg);
    RunResult out;
    run(st, cfg, out);
    const RunAnalysis A = analyze_run(cfg, st, out);
    CHECK(A.momentum_drift < 1e-3);
    CHECK(A.energy_drift < 1e-2);
    for (std::size_t k = 1; k < out.records.size(); ++k) CHECK(out.records[k].t > out.records[k - 1].t);
    // gamma is carried unchanged.
    SimState fresh = init(cfg);
    CHECK(fresh.ens.gamma == st.ens.gamma);
}

TEST_CASE("checkpoint restart is bitwise") {
    SimConfig cfg = small_config(100, 6.0);
    SimState a = init(cfg);
    RunResult ra;
    run(a, cfg, ra);

    SimConfig half = cfg;
    half.t_end = 3.0;
    SimState b = init(cfg);
    RunResult rb;
    run(b, half, rb);
    const std::string path = (std::filesystem::temp_directory_path() / "kaa_ckpt_test.bin").string();
    save_checkpoint(b, path);
    SimState c = load_checkpoint(path);
    std::remove(path.c_str());
    c.ens.refresh(c.time(), cfg.params);
    run(c, cfg, rb);

    REQUIRE(a.steps == c.steps);
    for (std::size_t i = 0; i < a.ens.size(); ++i) {
        CHECK(a.ens.theta[i] == c.ens.theta[i]);
        CHECK(a.ens.a[i] == c.ens.a[i]);
    }
    CHECK(a.charge.V == c.charge.V);
    CHECK(a.charge.X == c.charge.X);
    CHECK(ra.records.back().energy == rb.records.back().energy);

    // Deterministic reruns.
    SimState d = init(cfg);
    RunResult rd;
    run(d, cfg, rd);
    CHECK(d.ens.theta == a.ens.theta);
}

TEST_CASE("charge fit") {
    std::vector<DiagnosticsRecord> rec;
    const Vec3 c0(0.1, -0.2, 0.3), c1(1.5, 0.5, -2.0);
    for (int k = 0; k <= 40; ++k) {
        DiagnosticsRecord r;
        r.t = 20 + 4.5 * k;
        r.Vc = c0 + c1 / r.t;
        rec.push_back(r);
    }
    Params p;
    const ChargeFit f = charge_asymptotics(rec, 20, 200, -c1 / p.Qc, p);
    CHECK((f.Vinf - c0).norm() < 1e-12);
    CHECK((f.coeff - c1).norm() < 1e-10);
    CHECK(f.rel_error < 1e-10);
    CHECK(f.rel_residual < 1e-10);
    CHECK_THROWS_AS(charge_asymptotics(rec, 20, 25, c1, p), SimError);

    SimConfig cfg = free_config(200, 60.0);
    cfg.charge_v0 = Vec3(0.3, 0, 0);
    SimState st = init(cfg);
    RunResult out;
    run(st, cfg, out);
    const ChargeFit z = charge_asymptotics(out.records, 6, 60, Vec3::Zero(), cfg.params);
    CHECK(z.coeff.norm() < 1e-12);
    CHECK((z.Vinf - cfg.charge_v0).norm() < 1e-14);
}

TEST_CASE("scattering drift correction") {
    Params p;
    Rng rng(43);
    // Particles deep in the bulk region at very late times, with an angle
    // drifting exactly like -ln t [Q E(a) - Qc E(0)].
    const double T = 1e8;
    std::vector<Vec3> theta0, a, Ea;
    for (int i = 0; i < 40; ++i) {
        const ActionAngle aa = sample_bulk(rng, T, p);
        theta0.push_back(aa.theta);
        a.push_back(aa.a);
        Ea.push_back(Vec3(1e-3 * i, 2e-3, -1e-3));
    }
    const Vec3 E0(3e-3, 0, 1e-3);
    std::vector<AngleSnapshot> snaps;
    for (int k = 0; k <= 10; ++k) {
        const double t = T / 2 * (1 + k / 10.0);
        AngleSnapshot s;
        s.t = t;
        s.a = a;
        s.w.assign(a.size(), 1.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            s.theta.push_back(theta0[i] - std::log(t) * (p.Q * Ea[i] - p.Qc * E0));
        snaps.push_back(s);
    }
    const DriftReport d = scattering_drift(snaps, Ea, E0, p, true, true);
    CHECK(d.bulk == a.size());
    CHECK(d.considered == a.size());
    CHECK(d.fraction == 1.0);
    CHECK(d.median_ratio < 1e-6);
    // The opposite sign convention does not cancel this drift.
    const DriftReport lit = scattering_drift(snaps, Ea, E0, p, false, true);
    CHECK(lit.fraction < 1.0);

    // Without a mean field both variations vanish.
    SimConfig cfg = free_config(50, 40.0);
    cfg.snapshot_every = 100;
    SimState st = init(cfg);
    RunResult out;
    run(st, cfg, out);
    REQUIRE(out.snapshots.size() >= 2);
    std::vector<Vec3> zero(50, Vec3::Zero());
    const DriftReport z = scattering_drift(out.snapshots, zero, Vec3::Zero(), cfg.params, true, false);
    CHECK(z.median_ratio == 0.0);
    for (std::size_t i = 0; i < 50; ++i) CHECK(out.snapshots.back().theta[i] == out.snapshots.front().theta[i]);
}

TEST_CASE("field decay on a short run") {
    SimConfig cfg = small_config(400, 40.0);
    SimState st = init(cfg);
    RunResult out;
    run(st, cfg, out);
    const RunAnalysis A = analyze_run(cfg, st, out);
    CHECK(A.field_slope.slope < -1.7);
    CHECK(A.field_slope.slope > -2.3);
    CHECK(probe_points(10).size() == 65);
}

}  // TEST_SUITE
