#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "kaa/kepler.hpp"

namespace kaa {

/// Weighted Lagrangian particles. theta holds the pulled-back angle, so the
/// angle at time t is theta + t*a; x, v cache the physical (charge-frame)
/// state at time cache_t.
struct ParticleEnsemble {
    std::vector<Vec3> theta;
    std::vector<Vec3> a;
    std::vector<double> w;
    std::vector<double> gamma;

    std::vector<Vec3> x;
    std::vector<Vec3> v;
    double cache_t = 0;

    std::size_t size() const { return a.size(); }
    double total_weight() const;
    void push(const Vec3& theta_i, const Vec3& a_i, double w_i, double gamma_i);
    /// Recompute x, v from (theta + t a, a) for every particle.
    void refresh(double t, const Params& p);
    /// Ensemble whose cache holds arbitrary positions; used by field tests and
    /// for sources that are not Kepler particles.
    static ParticleEnsemble from_points(const std::vector<Vec3>& x, const std::vector<double>& w);
};

struct FieldSample {
    Vec3 y = Vec3::Zero();
    double psi = 0;
    Vec3 E = Vec3::Zero();
    Mat3 F = Mat3::Zero();
};

// Plummer-softened sums over the cached positions. E = grad psi exactly for
// the softened kernel; F is the Jacobian of E (symmetric).
double potential(const Vec3& y, const ParticleEnsemble& ens, double eps);
Vec3 efield(const Vec3& y, const ParticleEnsemble& ens, double eps);
Mat3 fgrad(const Vec3& y, const ParticleEnsemble& ens, double eps);
FieldSample sample(const Vec3& y, const ParticleEnsemble& ens, double eps);

/// Field at many targets in one pass (parallel over targets).
std::vector<Vec3> efield_batch(const std::vector<Vec3>& targets, const std::vector<Vec3>& src,
                               const std::vector<double>& w, double eps);
/// Field of the ensemble at its own particles. The self term vanishes for eps > 0.
std::vector<Vec3> efield_at_particles(const ParticleEnsemble& ens, double eps);

/// Radial cutoff: C^2 bump supported in [1/2, 2] with int phi(|x|)/|x|^2 dx = 1.
double cutoff(double r);
double cutoff_prime(double r);
/// Normalization constant of the cutoff, computed once by quadrature.
double cutoff_norm();

/// Scale-R piece of the field; integrating it against dR/R over (0, inf)
/// gives efield.
Vec3 efield_scale(const Vec3& y, const ParticleEnsemble& ens, double R, double eps);
/// Sum of efield_scale over a logarithmic grid (trapezoid in ln R).
Vec3 efield_resummed(const Vec3& y, const ParticleEnsemble& ens, double eps, int per_decade = 32);

/// Field and potential with each particle moved to its free-streaming
/// position t*a_i.
Vec3 effective_field(const Vec3& y, const ParticleEnsemble& ens, double t, double eps = 0);
double effective_potential(const Vec3& y, const ParticleEnsemble& ens, double t, double eps = 0);

struct ProfileSnapshot {
    double t = 0;
    std::vector<Vec3> a;
    std::vector<double> w;
};

struct WindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Time average of t^2 * effective_field(t*b) over the snapshots, at each grid
/// point b. Needs at least 8 snapshots.
std::vector<Vec3> asymptotic_profile(const std::vector<ProfileSnapshot>& window,
                                     const std::vector<Vec3>& grid, double eps = 0);
Vec3 asymptotic_profile_at(const std::vector<ProfileSnapshot>& window, const Vec3& b, double eps = 0);
/// Matching potential: time average of t * effective_potential(t*b).
std::vector<double> asymptotic_potential(const std::vector<ProfileSnapshot>& window,
                                         const std::vector<Vec3>& grid, double eps = 0);

struct ProfileRow {
    double t = 0;
    double coord = 0;  // |y| or a grid coordinate
    double psi = 0;
    Vec3 E = Vec3::Zero();
};
void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows);

}  // namespace kaa
