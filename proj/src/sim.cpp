#include "kaa/sim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "kaa/sampling.hpp"

namespace kaa {

namespace {

double normal_pdf(double z, double s) {
    return std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2 * std::numbers::pi));
}

struct Draw {
    Vec3 x, v;
};

Draw draw(const SamplerSpec& s, Rng& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    auto gauss3 = [&](double sd) { return Vec3(sd * N(rng), sd * N(rng), sd * N(rng)); };
    if (s.type == "gaussian") return {s.center_x + gauss3(s.widths[0]), s.center_v + gauss3(s.widths[1])};
    // shell
    double r;
    do {
        r = s.center_x.norm() + s.widths[0] * N(rng);
    } while (!(r > 0));
    const Vec3 dir = random_direction(rng);
    return {r * dir, s.center_v.norm() * dir + gauss3(s.widths[1])};
}

void kick(SimState& st, const SimConfig& cfg, double tm) {
    const Params& p = cfg.params;
    ParticleEnsemble& ens = st.ens;
    const std::size_t n = ens.size();
    st.Ec = field_at_charge(ens);
    if (p.Q == 0 && p.Qc == 0) return;  // the drift is the exact flow

    const double dt = st.dt;
    std::vector<Vec3> E;
    if (p.Q != 0) E = efield_at_particles(ens, cfg.eps);
    const Vec3 frame = -p.Qc * st.Ec * dt;
    bool hit = false;
#pragma omp parallel for schedule(static) reduction(|| : hit)
    for (std::size_t i = 0; i < n; ++i) {
        if (ens.x[i].norm() < 1e-12) {
            hit = true;
            continue;
        }
        Vec3 dv = frame;
        if (p.Q != 0) dv += p.Q * dt * E[i];
        ens.v[i] += dv;
        const ActionAngle aa = angle({ens.x[i], ens.v[i]}, p);
        ens.a[i] = aa.a;
        ens.theta[i] = aa.theta - tm * aa.a;
    }
    if (hit) throw SimError("particle reached the charge");
    st.charge.V += p.Qc * dt * st.Ec;
}

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw SimError("checkpoint truncated");
}
void put_vecs(std::ofstream& os, const std::vector<Vec3>& v) {
    for (const Vec3& e : v) put(os, e);
}
void get_vecs(std::ifstream& is, std::vector<Vec3>& v, std::size_t n) {
    v.resize(n);
    for (Vec3& e : v) get(is, e);
}

constexpr char kMagic[8] = {'K', 'A', 'A', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void SimConfig::validate() const {
    params.validate();
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(eps >= 0)) throw std::invalid_argument("eps must be non-negative");
    if (!(t_end >= 0)) throw std::invalid_argument("t_end must be non-negative");
    if (diag_every < 1 || snapshot_every < 1) throw std::invalid_argument("cadences must be positive");
    if (sampler.type != "gaussian" && sampler.type != "shell")
        throw std::invalid_argument("sampler.type must be gaussian or shell");
    if (!(sampler.widths[0] > 0 && sampler.widths[1] > 0)) throw std::invalid_argument("sampler widths must be positive");
    if (!(sampler.amplitude > 0)) throw std::invalid_argument("sampler amplitude must be positive");
}

double sampler_density(const SamplerSpec& s, const Vec3& x, const Vec3& v) {
    const double sx = s.widths[0], sv = s.widths[1];
    if (s.type == "gaussian") {
        double d = 1;
        for (int k = 0; k < 3; ++k) d *= normal_pdf(x[k] - s.center_x[k], sx) * normal_pdf(v[k] - s.center_v[k], sv);
        return d;
    }
    const double r = x.norm();
    if (!(r > 0)) return 0;
    const double R = s.center_x.norm();
    // Radius normal truncated to r > 0, direction uniform.
    const double mass = 0.5 * std::erfc(-R / (sx * std::sqrt(2.0)));
    double d = normal_pdf(r - R, sx) / mass / (4 * std::numbers::pi * r * r);
    const Vec3 vc = s.center_v.norm() * x / r;
    for (int k = 0; k < 3; ++k) d *= normal_pdf(v[k] - vc[k], sv);
    return d;
}

SimState init(const SimConfig& cfg) {
    cfg.validate();
    const Params& p = cfg.params;
    SimState st;
    st.dt = cfg.dt;
    st.charge.X = cfg.charge_x0;
    st.charge.V = cfg.charge_v0;
    st.charge.Vinf_est = cfg.charge_v0;
    Rng rng(cfg.seed);
    const double e0 = cfg.sampler.amplitude;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const Draw d = draw(cfg.sampler, rng);
        const Vec3 y = d.x - cfg.charge_x0, w = d.v - cfg.charge_v0;
        if (y.norm() < cfg.sampler.r_min_floor)
            throw DomainError("sampler draw " + std::to_string(i) + " lies within r_min_floor of the charge");
        const double dens = sampler_density(cfg.sampler, d.x, d.v);
        // Importance weights eps0^2 mu0^2 / (n p) with mu0^2 = p.
        const ActionAngle aa = angle({y, w}, p);
        st.ens.push(aa.theta, aa.a, e0 * e0 / static_cast<double>(cfg.n), e0 * std::sqrt(dens));
    }
    st.ens.refresh(0, p);
    return st;
}

double default_softening(const SimConfig& cfg) {
    Rng rng(cfg.seed);
    Vec3 lo = Vec3::Constant(INFINITY), hi = Vec3::Constant(-INFINITY);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const Vec3 x = draw(cfg.sampler, rng).x;
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    const double volume = (hi - lo).prod();
    if (!(volume > 0)) throw DomainError("default softening needs initial positions spanning a volume");
    return 0.05 * std::cbrt(volume / static_cast<double>(cfg.n));
}

SimState init_single(const SimConfig& cfg, const PhaseState& rel, double weight) {
    cfg.params.validate();
    SimState st;
    st.dt = cfg.dt;
    st.charge.X = cfg.charge_x0;
    st.charge.V = cfg.charge_v0;
    st.charge.Vinf_est = cfg.charge_v0;
    const ActionAngle aa = angle(rel, cfg.params);
    st.ens.push(aa.theta, aa.a, weight, 1.0);
    st.ens.refresh(0, cfg.params);
    return st;
}

void step(SimState& st, const SimConfig& cfg) {
    const double t = st.time();
    const double tm = t + 0.5 * st.dt;
    st.charge.X += 0.5 * st.dt * st.charge.V;
    st.ens.refresh(tm, cfg.params);
    kick(st, cfg, tm);
    st.charge.X += 0.5 * st.dt * st.charge.V;
    ++st.steps;
}

void run(SimState& st, const SimConfig& cfg, RunResult& out, const RunHooks& hooks) {
    if (st.theta_initial.empty()) {
        st.theta_initial = st.ens.theta;
        const EnergyMomentum em = energy_momentum(st, cfg);
        st.energy0 = em.energy;
        st.momentum0 = em.momentum;
        st.momentum_scale0 = em.momentum_scale;
    }
    auto record = [&] {
        out.records.push_back(diagnose(st, cfg));
        if (hooks.on_record) hooks.on_record(out.records.back());
    };
    if (out.records.empty()) record();
    const auto n_end = static_cast<std::int64_t>(std::llround((cfg.t_end - st.t0) / st.dt));
    while (st.steps < n_end) {
        step(st, cfg);
        if (st.steps % cfg.diag_every == 0 || st.steps == n_end) record();
        if (st.steps % cfg.snapshot_every == 0 && st.time() >= cfg.snapshot_from - 1e-9)
            out.snapshots.push_back({st.time(), st.ens.theta, st.ens.a, st.ens.w});
    }
}

RunResult run(const SimConfig& cfg, const RunHooks& hooks) {
    SimState st = init(cfg);
    RunResult out;
    run(st, cfg, out, hooks);
    return out;
}

void save_checkpoint(const SimState& st, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SimError("cannot write checkpoint " + path);
    os.write(kMagic, sizeof kMagic);
    const std::uint64_t n = st.ens.size();
    put(os, n);
    put(os, st.t0);
    put(os, st.steps);
    put(os, st.dt);
    put_vecs(os, st.ens.theta);
    put_vecs(os, st.ens.a);
    for (double w : st.ens.w) put(os, w);
    for (double g : st.ens.gamma) put(os, g);
    put(os, st.charge.X);
    put(os, st.charge.V);
    put(os, st.charge.Vinf_est);
    put(os, st.charge.W);
    put(os, st.Ec);
    const std::uint64_t has_ref = st.theta_initial.size() == n ? 1 : 0;
    put(os, has_ref);
    if (has_ref) {
        put_vecs(os, st.theta_initial);
        put(os, st.energy0);
        put(os, st.momentum0);
        put(os, st.momentum_scale0);
    }
    if (!os) throw SimError("checkpoint write failed: " + path);
}

SimState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SimError("cannot read checkpoint " + path);
    char magic[sizeof kMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw SimError("not a checkpoint: " + path);
    SimState st;
    std::uint64_t n = 0;
    get(is, n);
    get(is, st.t0);
    get(is, st.steps);
    get(is, st.dt);
    get_vecs(is, st.ens.theta, n);
    get_vecs(is, st.ens.a, n);
    st.ens.w.resize(n);
    st.ens.gamma.resize(n);
    for (double& w : st.ens.w) get(is, w);
    for (double& g : st.ens.gamma) get(is, g);
    get(is, st.charge.X);
    get(is, st.charge.V);
    get(is, st.charge.Vinf_est);
    get(is, st.charge.W);
    get(is, st.Ec);
    std::uint64_t has_ref = 0;
    get(is, has_ref);
    if (has_ref) {
        get_vecs(is, st.theta_initial, n);
        get(is, st.energy0);
        get(is, st.momentum0);
        get(is, st.momentum_scale0);
    }
    st.ens.x.assign(n, Vec3::Zero());
    st.ens.v.assign(n, Vec3::Zero());
    st.ens.cache_t = NAN;
    return st;
}

}  // namespace kaa
