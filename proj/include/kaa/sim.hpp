#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kaa/field.hpp"
#include "kaa/kepler.hpp"

namespace kaa {

/// Initial gas density. gaussian: independent normals around center_x and
/// center_v with standard deviations widths[0] (position) and widths[1]
/// (velocity). shell: radius |center_x| + widths[0]*N(0,1) in a uniform
/// direction, velocity outward at |center_v| plus widths[1]*N(0,1) per component.
/// amplitude is the overall size eps0 of the density.
struct SamplerSpec {
    std::string type = "gaussian";
    Vec3 center_x = Vec3(2.0, 0.0, 0.0);
    Vec3 center_v = Vec3(1.5, 0.0, 0.0);
    double widths[2] = {0.5, 0.3};
    double amplitude = 0.05;
    /// Draws closer than this to the charge are rejected with an error.
    double r_min_floor = 1e-3;
};

struct SimConfig {
    Params params;
    std::size_t n = 10000;
    double eps = 0.05;
    double dt = 0.02;
    double t_end = 200;
    std::uint64_t seed = 1;
    SamplerSpec sampler;
    int diag_every = 50;
    Vec3 charge_x0 = Vec3::Zero();
    Vec3 charge_v0 = Vec3::Zero();
    /// Angle snapshots for the late-time analyses are taken every
    /// snapshot_every steps once t >= snapshot_from.
    int snapshot_every = 250;
    double snapshot_from = 20;

    void validate() const;
};

struct ChargeState {
    Vec3 X = Vec3::Zero();
    Vec3 V = Vec3::Zero();
    Vec3 Vinf_est = Vec3::Zero();
    Vec3 W = Vec3::Zero();
};

/// Gas particles live in the charge frame: ens.x, ens.v are positions and
/// velocities relative to the charge.
struct SimState {
    double t0 = 0;
    std::int64_t steps = 0;
    double dt = 0;
    ParticleEnsemble ens;
    ChargeState charge;
    /// Gas field at the charge from the most recent kick.
    Vec3 Ec = Vec3::Zero();
    /// Reference values from the start of the run (kept across checkpoints).
    std::vector<Vec3> theta_initial;
    double energy0 = 0;
    Vec3 momentum0 = Vec3::Zero();
    double momentum_scale0 = 0;

    double time() const { return t0 + static_cast<double>(steps) * dt; }
};

struct MomentProxies {
    // sup_i <f_i>^2 gamma_i for f in (a, xi, lambda) and sup_i <eta_i> gamma_i,
    // with <r> = sqrt(4 + r^2).
    double a = 0, xi = 0, lambda = 0, eta = 0;
};

struct DiagnosticsRecord {
    double t = 0;
    double supE = 0;        // max over probes of |E|
    double supE_proxy = 0;  // max over probes of (t^2 + |y|^2)|E|
    MomentProxies moments;
    double energy = 0;
    Vec3 momentum = Vec3::Zero();
    Vec3 Xc = Vec3::Zero();
    Vec3 Vc = Vec3::Zero();
    Vec3 Ec = Vec3::Zero();
    Vec3 W = Vec3::Zero();
    double drift_max = 0;     // max_i |theta_i(t) - theta_i(0)|
    double drift_median = 0;  // median of the same
};

struct AngleSnapshot {
    double t = 0;
    std::vector<Vec3> theta;
    std::vector<Vec3> a;
    std::vector<double> w;
    ProfileSnapshot profile() const { return {t, a, w}; }
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    std::vector<AngleSnapshot> snapshots;
};

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Draws the gas from the sampler (weights eps0^2 mu0^2/(n p), gamma = eps0 mu0)
/// and converts every particle to angle-action variables relative to the charge.
SimState init(const SimConfig& cfg);
/// Single-particle state placed deterministically (relative position and velocity).
SimState init_single(const SimConfig& cfg, const PhaseState& relative, double weight);

/// Density mu0^2 of the sampler at (x, v), normalized to total mass 1.
double sampler_density(const SamplerSpec& s, const Vec3& x, const Vec3& v);
/// 0.05 (V/n)^(1/3) with V the bounding-box volume of the initial positions
/// that init() would draw for this config.
double default_softening(const SimConfig& cfg);

/// One Strang step: exact Kepler drift for dt/2, field kick for dt, drift for dt/2.
void step(SimState& st, const SimConfig& cfg);

struct RunHooks {
    std::function<void(const DiagnosticsRecord&)> on_record;
};

/// Advances st to cfg.t_end, appending to out (a record at the start time is
/// added when out is empty). out keeps everything recorded
/// so far if a step throws.
void run(SimState& st, const SimConfig& cfg, RunResult& out, const RunHooks& hooks = {});
RunResult run(const SimConfig& cfg, const RunHooks& hooks = {});

void save_checkpoint(const SimState& st, const std::string& path);
SimState load_checkpoint(const std::string& path);

// Diagnostics. All of them refresh the particle cache to st.time().
struct EnergyMomentum {
    double energy = 0;
    Vec3 momentum = Vec3::Zero();
    double momentum_scale = 0;  // mg sum w |v| + Mc |V|
};
EnergyMomentum energy_momentum(SimState& st, const SimConfig& cfg);
/// Per-particle |w|^2 + q/|y| in the charge frame.
std::vector<double> relative_energies(SimState& st, const SimConfig& cfg);
std::vector<Vec3> probe_points(double t);
DiagnosticsRecord diagnose(SimState& st, const SimConfig& cfg);
MomentProxies moment_proxies(const ParticleEnsemble& ens, const Params& p);
/// Unsoftened gas field at the charge.
Vec3 field_at_charge(const ParticleEnsemble& ens);

struct ChargeFit {
    Vec3 Vinf = Vec3::Zero();
    Vec3 coeff = Vec3::Zero();      // 1/t coefficient
    double rel_residual = 0;        // rms misfit / rms of the centred data
    Vec3 predicted = Vec3::Zero();  // -Qc * E_inf(0)
    double rel_error = 0;           // |coeff - predicted| / |predicted|
    std::size_t points = 0;
};
/// Least squares V(t) ~ Vinf + coeff/t over records with t in [t_lo, t_hi].
ChargeFit charge_asymptotics(const std::vector<DiagnosticsRecord>& records, double t_lo, double t_hi,
                             const Vec3& Einf0, const Params& p);

struct DriftReport {
    std::size_t particles = 0;
    std::size_t bulk = 0;        // in the bulk region at T
    std::size_t considered = 0;  // bulk, or all particles when not bulk_only
    std::size_t improved = 0;    // corrected variation <= uncorrected/2
    double fraction = 0;         // improved / considered (0 when nothing is considered)
    double median_ratio = 0;   // median corrected/uncorrected
    bool derived_sign = true;
};
/// Corrected angle theta_i + s ln t [Q E_inf(a_i) - Qc E_inf(0)] compared with
/// theta_i over the snapshots in [T/2, T]. derived_sign = true uses s = +1 (the
/// sign the equations of motion give); false uses the literal form
/// theta_i - ln t [Q E_inf(a_i) + Qc E_inf(0)]. bulk_only restricts to particles
/// in the bulk region at T.
DriftReport scattering_drift(const std::vector<AngleSnapshot>& snaps, const std::vector<Vec3>& Einf_a,
                             const Vec3& Einf0, const Params& p, bool derived_sign, bool bulk_only);

}  // namespace kaa
