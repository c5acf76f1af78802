// kaa: command-line front end for the Kepler angle-action library and the
// gas/point-charge simulator.
//
// Exit codes: 0 success, 1 verification failure, 2 bad arguments or config,
// 3 domain error, 4 simulation failed mid-run (partial outputs are kept).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kaa/analysis.hpp"
#include "kaa/config.hpp"
#include "kaa/field.hpp"
#include "kaa/kepler.hpp"
#include "kaa/sim.hpp"
#include "kaa/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kaa;

namespace {

constexpr int kOk = 0, kFail = 1, kUsage = 2, kDomain = 3, kMidRun = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec3 to_vec(const std::vector<double>& v, const std::string& flag) {
    if (v.size() != 3) throw UsageError(flag + " needs three comma-separated numbers");
    return Vec3(v[0], v[1], v[2]);
}

json jvec(const Vec3& v) { return {v[0], v[1], v[2]}; }

json coordinates(const PhaseState& s, const ActionAngle& aa, const Params& p) {
    const SICCoords c = to_sic(aa, p);
    const RhoSigma rs = sigma(c.eta, c.kappa());
    json j;
    j["x"] = jvec(s.x);
    j["v"] = jvec(s.v);
    j["theta"] = jvec(aa.theta);
    j["a"] = jvec(aa.a);
    j["xi"] = c.xi;
    j["eta"] = c.eta;
    j["lambda"] = c.lambda();
    j["kappa"] = c.kappa();
    j["rho"] = rs.rho;
    j["sigma"] = rs.sigma;
    j["iota"] = sign_of(rs.branch);
    return j;
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

Params params_with_q(double q) {
    Params p;
    p.q = q;
    p.validate();
    return p;
}

// ---- simulate -------------------------------------------------------------

void write_particles(std::ostream& os, double t, const ParticleEnsemble& ens) {
    for (std::size_t i = 0; i < ens.size(); ++i) {
        os << t << ',' << i;
        for (int k = 0; k < 3; ++k) os << ',' << ens.x[i][k];
        for (int k = 0; k < 3; ++k) os << ',' << ens.v[i][k];
        const Vec3 th = ens.theta[i] + t * ens.a[i];
        for (int k = 0; k < 3; ++k) os << ',' << th[k];
        for (int k = 0; k < 3; ++k) os << ',' << ens.a[i][k];
        os << ',' << ens.gamma[i] << ',' << ens.w[i] << '\n';
    }
}

const char* kParticlesHeader = "t,id,x,y,z,vx,vy,vz,theta1,theta2,theta3,a1,a2,a3,gamma,w\n";

const char* kDiagHeader =
    "t,supE,supE_proxy,mom_a,mom_xi,mom_lambda,mom_eta,energy,Px,Py,Pz,Xc1,Xc2,Xc3,Vc1,Vc2,Vc3,"
    "Ec1,Ec2,Ec3,W1,W2,W3,drift_max,drift_median\n";

void write_diag(std::ostream& os, const DiagnosticsRecord& r) {
    os << r.t << ',' << r.supE << ',' << r.supE_proxy << ',' << r.moments.a << ',' << r.moments.xi << ','
       << r.moments.lambda << ',' << r.moments.eta << ',' << r.energy;
    for (const Vec3* v : {&r.momentum, &r.Xc, &r.Vc, &r.Ec, &r.W})
        for (int k = 0; k < 3; ++k) os << ',' << (*v)[k];
    os << ',' << r.drift_max << ',' << r.drift_median << '\n';
}

void write_plot_script(const fs::path& dir) {
    std::ofstream gp(dir / "plot.gp");
    gp << "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set logscale xy\n"
          "set xlabel 't'\n"
          "set terminal pngcairo size 900,600\n"
          "set output 'field_decay.png'\n"
          "plot 'diagnostics.csv' using 1:2 with lines title 'sup |E|', \\\n"
          "     '' using 1:(1.0/$1**2) with lines dashtype 2 title 't^-2'\n"
          "set output 'field_proxy.png'\n"
          "plot 'diagnostics.csv' using 1:3 with lines title '(t^2+|y|^2)|E|'\n"
          "unset logscale y\n"
          "set output 'moments.png'\n"
          "plot 'diagnostics.csv' using 1:4 with lines, '' using 1:5 with lines, \\\n"
          "     '' using 1:6 with lines, '' using 1:7 with lines\n"
          "set output 'charge_velocity.png'\n"
          "plot 'diagnostics.csv' using 1:15 with lines, '' using 1:16 with lines, '' using 1:17 with lines\n";
}

json verdicts(const RunAnalysis& A) {
    json v;
    v["energy_drift_below_1pct"] = A.energy_drift < 1e-2;
    v["momentum_drift_below_1e-3"] = A.momentum_drift < 1e-3;
    v["field_slope_in_range"] = A.field_slope.points >= 2 && A.field_slope.slope >= -2.3 && A.field_slope.slope <= -1.7;
    v["field_proxy_bounded"] = A.proxy.bounded;
    v["charge_coefficient_within_20pct"] = A.have_profile && A.have_fit && A.fit.rel_error < 0.2;
    v["scattering_drift_reduced_90pct_bulk"] =
        A.drift_bulk_derived.considered > 0 && A.drift_bulk_derived.fraction >= 0.9;
    v["moment_trends"] = A.moments.pass;
    return v;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, bool all_snapshots,
                 const std::string& checkpoint_in, const std::string& checkpoint_out) {
    const auto t_start = std::chrono::steady_clock::now();
    SimConfig cfg = load_config(config_path);
    cfg.validate();
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::ofstream diag(dir / "diagnostics.csv");
    std::ofstream parts(dir / "particles.csv");
    if (!diag || !parts) throw UsageError("cannot write to " + out_dir);
    diag.precision(17);
    parts.precision(17);
    diag << kDiagHeader;
    parts << kParticlesHeader;
    write_plot_script(dir);

    SimState st = checkpoint_in.empty() ? init(cfg) : load_checkpoint(checkpoint_in);
    st.ens.refresh(st.time(), cfg.params);
    write_particles(parts, st.time(), st.ens);
    parts.flush();

    RunResult res;
    std::size_t snaps_written = 0;
    double last_written = st.time();
    auto flush_snapshots = [&] {
        for (; snaps_written < res.snapshots.size(); ++snaps_written) {
            const AngleSnapshot& s = res.snapshots[snaps_written];
            if (s.t == last_written) continue;
            ParticleEnsemble e;
            for (std::size_t i = 0; i < s.theta.size(); ++i) e.push(s.theta[i], s.a[i], s.w[i], st.ens.gamma[i]);
            e.refresh(s.t, cfg.params);
            write_particles(parts, s.t, e);
            last_written = s.t;
        }
        parts.flush();
    };
    RunHooks hooks;
    hooks.on_record = [&](const DiagnosticsRecord& r) {
        write_diag(diag, r);
        diag.flush();
        if (all_snapshots) flush_snapshots();
    };

    json summary;
    summary["config"] = config_to_json(cfg);
    try {
        run(st, cfg, res, hooks);
    } catch (const std::exception& e) {
        summary["error"] = e.what();
        summary["failed_at_t"] = st.time();
        summary["records"] = res.records.size();
        std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
        std::cerr << "simulation failed at t=" << st.time() << ": " << e.what() << '\n';
        return kMidRun;
    }
    if (all_snapshots) flush_snapshots();
    st.ens.refresh(st.time(), cfg.params);
    if (last_written != st.time()) write_particles(parts, st.time(), st.ens);
    parts.flush();
    if (!checkpoint_out.empty()) save_checkpoint(st, checkpoint_out);

    const RunAnalysis A = analyze_run(cfg, st, res);
    summary["analysis"] = A.to_json();
    summary["verdicts"] = verdicts(A);
    summary["records"] = res.records.size();
    summary["snapshots"] = res.snapshots.size();
    summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';

    // Asymptotic profile on a line through the origin, when enough snapshots exist.
    if (A.have_profile) {
        std::vector<ProfileSnapshot> window;
        for (const AngleSnapshot& s : res.snapshots) window.push_back(s.profile());
        std::vector<Vec3> grid;
        std::vector<ProfileRow> rows;
        for (int k = -40; k <= 40; ++k) grid.emplace_back(0.1 * k, 0.0, 0.0);
        const std::vector<Vec3> E = asymptotic_profile(window, grid, cfg.eps);
        const std::vector<double> psi = asymptotic_potential(window, grid, cfg.eps);
        for (std::size_t k = 0; k < grid.size(); ++k) rows.push_back({st.time(), grid[k][0], psi[k], E[k]});
        std::ofstream prof(dir / "profile.csv");
        write_profile_csv(prof, rows);
    }
    std::cout << summary["verdicts"].dump(2) << std::endl;
    return kOk;
}

// ---- field-profile ----------------------------------------------------------

struct ParticleRows {
    std::map<double, std::vector<std::size_t>> by_time;
    std::vector<Vec3> x, a;
    std::vector<double> w;
};

ParticleRows read_particles(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read " + path);
    std::string line;
    if (!std::getline(is, line)) throw UsageError(path + ": empty file");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    auto col = [&](const std::string& name) {
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (cols[k] == name) return k;
        throw UsageError(path + ": missing column " + name);
    };
    const std::size_t ct = col("t"), cx = col("x"), ca = col("a1"), cw = col("w");
    ParticleRows rows;
    std::vector<double> f;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        f.clear();
        std::stringstream ss(line);
        std::string c;
        try {
            while (std::getline(ss, c, ',')) f.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": not a number");
        }
        if (f.size() != cols.size()) throw UsageError(path + ":" + std::to_string(lineno) + ": wrong column count");
        rows.by_time[f[ct]].push_back(rows.x.size());
        rows.x.emplace_back(f[cx], f[cx + 1], f[cx + 2]);
        rows.a.emplace_back(f[ca], f[ca + 1], f[ca + 2]);
        rows.w.push_back(f[cw]);
    }
    if (rows.x.empty()) throw UsageError(path + ": no particle rows");
    return rows;
}

int cmd_field_profile(const std::string& path, const std::string& mode, double eps, double t_sel,
                      double r_max, int points, const std::string& out) {
    const ParticleRows rows = read_particles(path);
    std::vector<ProfileRow> table;
    if (mode == "radial") {
        auto it = std::isnan(t_sel) ? std::prev(rows.by_time.end()) : rows.by_time.find(t_sel);
        if (it == rows.by_time.end()) throw UsageError("no particle rows at t = " + std::to_string(t_sel));
        std::vector<Vec3> x;
        std::vector<double> w;
        for (std::size_t i : it->second) {
            x.push_back(rows.x[i]);
            w.push_back(rows.w[i]);
        }
        const ParticleEnsemble ens = ParticleEnsemble::from_points(x, w);
        const double t = it->first;
        const double top = std::isnan(r_max) ? 4 * std::max(t, 1.0) : r_max;
        // Radii log-spaced over four decades below top, along +x.
        for (int k = 0; k < points; ++k) {
            const double r = top * std::pow(10.0, -4.0 * (points - 1 - k) / std::max(points - 1, 1));
            const FieldSample s = sample(Vec3(r, 0, 0), ens, eps);
            table.push_back({t, r, s.psi, s.E});
        }
    } else if (mode == "asymptotic") {
        std::vector<ProfileSnapshot> window;
        for (const auto& [t, idx] : rows.by_time) {
            if (!(t > 0)) continue;
            ProfileSnapshot s{t, {}, {}};
            for (std::size_t i : idx) {
                s.a.push_back(rows.a[i]);
                s.w.push_back(rows.w[i]);
            }
            window.push_back(std::move(s));
        }
        const double top = std::isnan(r_max) ? 4.0 : r_max;
        std::vector<Vec3> grid;
        for (int k = 0; k < points; ++k) grid.emplace_back(-top + 2 * top * k / std::max(points - 1, 1), 0, 0);
        const std::vector<Vec3> E = asymptotic_profile(window, grid, eps);
        const std::vector<double> psi = asymptotic_potential(window, grid, eps);
        const double T = window.empty() ? 0 : window.back().t;
        for (int k = 0; k < points; ++k) table.push_back({T, grid[k][0], psi[k], E[k]});
    } else {
        throw UsageError("--mode must be radial or asymptotic");
    }
    if (out.empty()) {
        write_profile_csv(std::cout, table);
    } else {
        std::ofstream os(out);
        if (!os) throw UsageError("cannot write " + out);
        write_profile_csv(os, table);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"Angle-action variables for repulsive Kepler scattering and a gas/point-charge simulator"};
    app.require_subcommand(1, 1);

    std::vector<double> x, v, theta, a;
    double q = 1.0, t = 0.0;
    bool inverse = false;

    auto* tr = app.add_subcommand("transform", "(x, v) -> angle-action and scattering coordinates");
    tr->add_option("--x", x, "position")->delimiter(',')->expected(3);
    tr->add_option("--v", v, "velocity")->delimiter(',')->expected(3);
    tr->add_option("--theta", theta, "angle (with --inverse)")->delimiter(',')->expected(3);
    tr->add_option("--a", a, "action (with --inverse)")->delimiter(',')->expected(3);
    tr->add_option("--q", q, "charge product q > 0");
    tr->add_flag("--inverse", inverse, "read (theta, a) instead of (x, v)");

    auto* fl = app.add_subcommand("flow", "exact Kepler flow of (x, v) for time t");
    fl->add_option("--x", x, "position")->delimiter(',')->expected(3)->required();
    fl->add_option("--v", v, "velocity")->delimiter(',')->expected(3)->required();
    fl->add_option("--q", q, "charge product q > 0");
    fl->add_option("--t", t, "time (may be negative)")->required();

    auto* sc = app.add_subcommand("scatter", "velocities at x0 whose asymptotic velocity is a");
    sc->add_option("--x", x, "position x0")->delimiter(',')->expected(3)->required();
    sc->add_option("--a", a, "asymptotic velocity")->delimiter(',')->expected(3)->required();
    sc->add_option("--q", q, "charge product q > 0");

    std::string config, out_dir = "run", ck_in, ck_out;
    bool all_snapshots = false;
    auto* sim = app.add_subcommand("simulate", "run the gas/point-charge simulation");
    sim->add_option("--config", config, "JSON config")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_flag("--all-snapshots", all_snapshots, "write particles at every angle snapshot");
    sim->add_option("--resume", ck_in, "start from a checkpoint");
    sim->add_option("--checkpoint", ck_out, "write a checkpoint at the end");

    std::string suite;
    std::uint64_t seed = 1;
    long long samples = -1;
    auto* ver = app.add_subcommand("verify", "run a property suite and print its report");
    ver->add_option("--suite", suite, "roundtrip | canonicity | flow | bounds | transitions | all")->required();
    ver->add_option("--seed", seed, "random seed");
    ver->add_option("--samples", samples, "sample count (default: suite default)");

    std::string particles, mode = "radial", prof_out;
    double eps = 0.0, t_sel = NAN, r_max = NAN;
    int points = 64;
    auto* fp = app.add_subcommand("field-profile", "field profile from a particles.csv dump");
    fp->add_option("--particles", particles, "particles.csv written by simulate")->required();
    fp->add_option("--mode", mode, "radial (field at one time) | asymptotic (time-averaged rescaled field)");
    fp->add_option("--eps", eps, "softening");
    fp->add_option("--t", t_sel, "time to use in radial mode (default: last)");
    fp->add_option("--r-max", r_max, "largest radius / grid half-width");
    fp->add_option("--points", points, "number of rows")->check(CLI::PositiveNumber);
    fp->add_option("--out", prof_out, "output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        std::cout.precision(17);
        if (*tr) {
            const Params p = params_with_q(q);
            if (inverse) {
                if (theta.empty() || a.empty()) throw UsageError("--inverse needs --theta and --a");
                const ActionAngle aa{to_vec(theta, "--theta"), to_vec(a, "--a"), Branch::plus};
                if (!(aa.a.norm() > 0)) throw DomainError("|a| must be positive");
                print(coordinates(to_phase(aa, p), aa, p));
            } else {
                if (x.empty() || v.empty()) throw UsageError("transform needs --x and --v");
                const PhaseState s{to_vec(x, "--x"), to_vec(v, "--v")};
                print(coordinates(s, angle(s, p), p));
            }
            return kOk;
        }
        if (*fl) {
            const Params p = params_with_q(q);
            const PhaseState s = kepler_propagate({to_vec(x, "--x"), to_vec(v, "--v")}, t, p);
            print({{"t", t}, {"x", jvec(s.x)}, {"v", jvec(s.v)}});
            return kOk;
        }
        if (*sc) {
            const Params p = params_with_q(q);
            const Vec3 x0 = to_vec(x, "--x"), av = to_vec(a, "--a");
            json sols = json::array();
            for (const Vec3& w : scattering_solutions(x0, av, p))
                sols.push_back({{"v", jvec(w)}, {"L", jvec(x0.cross(w))}});
            print({{"x", jvec(x0)}, {"a", jvec(av)}, {"solutions", sols}});
            return kOk;
        }
        if (*sim) return cmd_simulate(config, out_dir, all_snapshots, ck_in, ck_out);
        if (*ver) {
            std::vector<std::string> names;
            if (suite == "all")
                names = suite_names();
            else
                names = {suite};
            bool pass = true;
            json reports = json::array();
            for (const std::string& name : names) {
                const std::size_t n = samples >= 0 ? static_cast<std::size_t>(samples) : default_samples(name);
                const SuiteReport r = run_suite(name, seed, n);
                pass = pass && r.pass;
                reports.push_back(r.to_json());
            }
            print(names.size() == 1 ? reports[0] : reports);
            return pass ? kOk : kFail;
        }
        if (*fp) return cmd_field_profile(particles, mode, eps, t_sel, r_max, points, prof_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const WindowError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kMidRun;
    }
    return kUsage;
}
