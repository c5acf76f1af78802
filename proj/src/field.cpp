#include "kaa/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "field_kernels.hpp"

namespace kaa {

namespace {

constexpr double kInv4Pi = 0.25 / std::numbers::pi;

struct SoA {
    std::vector<double> x, y, z, w;
    explicit SoA(const std::vector<Vec3>& pts, const std::vector<double>& wt) {
        const std::size_t n = pts.size();
        x.resize(n);
        y.resize(n);
        z.resize(n);
        w = wt;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = pts[i][0];
            y[i] = pts[i][1];
            z[i] = pts[i][2];
        }
    }
    kernels::Sources view() const { return {x.data(), y.data(), z.data(), w.data(), x.size()}; }
};

// Quintic smootherstep: 0 at 0, 1 at 1, first and second derivatives vanish at both ends.
double s5(double u) { return u * u * u * (u * (6 * u - 15) + 10); }
double s5p(double u) { return 30 * u * u * (u - 1) * (u - 1); }

double bump(double r) {
    if (r <= 0.5 || r >= 2.0) return 0.0;
    if (r <= 1.0) return s5(2 * r - 1);
    return s5(2 - r);
}

double bump_prime(double r) {
    if (r <= 0.5 || r >= 2.0) return 0.0;
    if (r <= 1.0) return 2 * s5p(2 * r - 1);
    return -s5p(2 - r);
}

double compute_norm() {
    // Simpson on each polynomial piece is exact up to round-off.
    auto simpson = [](double lo, double hi) {
        const int m = 64;
        double h = (hi - lo) / m, s = bump(lo) + bump(hi);
        for (int k = 1; k < m; ++k) s += bump(lo + k * h) * (k % 2 ? 4 : 2);
        return s * h / 3;
    };
    const double integral = simpson(0.5, 1.0) + simpson(1.0, 2.0);
    return 1.0 / (4 * std::numbers::pi * integral);
}

std::vector<Vec3> gather_free(const ParticleEnsemble& ens, double t) {
    std::vector<Vec3> pts(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) pts[i] = t * ens.a[i];
    return pts;
}

}  // namespace

double ParticleEnsemble::total_weight() const {
    double s = 0;
    for (double wi : w) s += wi;
    return s;
}

void ParticleEnsemble::push(const Vec3& theta_i, const Vec3& a_i, double w_i, double gamma_i) {
    theta.push_back(theta_i);
    a.push_back(a_i);
    w.push_back(w_i);
    gamma.push_back(gamma_i);
    x.emplace_back(Vec3::Zero());
    v.emplace_back(Vec3::Zero());
}

void ParticleEnsemble::refresh(double t, const Params& p) {
    const std::size_t n = size();
    x.resize(n);
    v.resize(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        PhaseState s = to_phase({theta[i] + t * a[i], a[i], Branch::plus}, p);
        x[i] = s.x;
        v[i] = s.v;
    }
    cache_t = t;
}

ParticleEnsemble ParticleEnsemble::from_points(const std::vector<Vec3>& pts, const std::vector<double>& wt) {
    ParticleEnsemble e;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        e.push(Vec3::Zero(), Vec3::UnitX(), wt[i], 0.0);
        e.x[i] = pts[i];
    }
    return e;
}

double potential(const Vec3& y, const ParticleEnsemble& ens, double eps) {
    SoA s(ens.x, ens.w);
    return -kInv4Pi * kernels::inverse_distance_sum(s.view(), y[0], y[1], y[2], eps * eps);
}

Vec3 efield(const Vec3& y, const ParticleEnsemble& ens, double eps) {
    return efield_batch({y}, ens.x, ens.w, eps)[0];
}

Mat3 fgrad(const Vec3& y, const ParticleEnsemble& ens, double eps) {
    Mat3 F = Mat3::Zero();
    const double e2 = eps * eps;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Vec3 r = y - ens.x[i];
        const double s2 = r.squaredNorm() + e2;
        if (s2 == 0) continue;
        const double s = std::sqrt(s2);
        const double i3 = 1.0 / (s2 * s), i5 = i3 / s2;
        F += ens.w[i] * (i3 * Mat3::Identity() - 3.0 * i5 * r * r.transpose());
    }
    return kInv4Pi * F;
}

FieldSample sample(const Vec3& y, const ParticleEnsemble& ens, double eps) {
    return {y, potential(y, ens, eps), efield(y, ens, eps), fgrad(y, ens, eps)};
}

std::vector<Vec3> efield_batch(const std::vector<Vec3>& targets, const std::vector<Vec3>& src,
                               const std::vector<double>& w, double eps) {
    SoA s(src, w);
    const std::size_t m = targets.size();
    std::vector<double> tx(m), ty(m), tz(m), ex(m, 0.0), ey(m, 0.0), ez(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        tx[k] = targets[k][0];
        ty[k] = targets[k][1];
        tz[k] = targets[k][2];
    }
    kernels::efield_sum(s.view(), tx.data(), ty.data(), tz.data(), m, eps * eps, ex.data(), ey.data(),
                        ez.data());
    std::vector<Vec3> out(m);
    for (std::size_t k = 0; k < m; ++k) out[k] = kInv4Pi * Vec3(ex[k], ey[k], ez[k]);
    return out;
}

std::vector<Vec3> efield_at_particles(const ParticleEnsemble& ens, double eps) {
    SoA s(ens.x, ens.w);
    const std::size_t n = ens.size();
    std::vector<double> ex(n, 0.0), ey(n, 0.0), ez(n, 0.0);
    kernels::efield_self(s.view(), eps * eps, ex.data(), ey.data(), ez.data());
    std::vector<Vec3> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = kInv4Pi * Vec3(ex[k], ey[k], ez[k]);
    return out;
}

double cutoff_norm() {
    static const double c = compute_norm();
    return c;
}

double cutoff(double r) { return cutoff_norm() * bump(r); }
double cutoff_prime(double r) { return cutoff_norm() * bump_prime(r); }

// With int phi(|x|)/|x|^2 dx = 1 one has 1/(4 pi s) = int phi(s/R) R^-1 dR/R, so
// psi_R = -R^-1 sum w phi(s/R) and E_R = grad psi_R = -R^-2 sum w phi'(s/R) r/s.
Vec3 efield_scale(const Vec3& y, const ParticleEnsemble& ens, double R, double eps) {
    if (!(R > 0)) throw DomainError("efield_scale: R must be positive");
    Vec3 E = Vec3::Zero();
    const double e2 = eps * eps;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Vec3 r = y - ens.x[i];
        const double s = std::sqrt(r.squaredNorm() + e2);
        const double u = s / R;
        if (u <= 0.5 || u >= 2.0) continue;
        E -= ens.w[i] * cutoff_prime(u) / s * r;
    }
    return E / (R * R);
}

Vec3 efield_resummed(const Vec3& y, const ParticleEnsemble& ens, double eps, int per_decade) {
    if (per_decade < 1) throw std::invalid_argument("per_decade must be positive");
    double smin = INFINITY, smax = 0;
    const double e2 = eps * eps;
    for (const Vec3& xi : ens.x) {
        double s = std::sqrt((y - xi).squaredNorm() + e2);
        if (s > 0) {
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
    }
    if (!(smax > 0)) return Vec3::Zero();
    const double h = std::log(10.0) / per_decade;
    const double lo = std::log(smin / 2) - h, hi = std::log(2 * smax) + h;
    const int m = static_cast<int>(std::ceil((hi - lo) / h));
    // The integrand vanishes at both ends, so the trapezoid rule is a plain sum.
    Vec3 E = Vec3::Zero();
    for (int k = 0; k <= m; ++k) E += efield_scale(y, ens, std::exp(lo + k * h), eps);
    return h * E;
}

Vec3 effective_field(const Vec3& y, const ParticleEnsemble& ens, double t, double eps) {
    return efield_batch({y}, gather_free(ens, t), ens.w, eps)[0];
}

double effective_potential(const Vec3& y, const ParticleEnsemble& ens, double t, double eps) {
    std::vector<Vec3> pts = gather_free(ens, t);
    SoA s(pts, ens.w);
    return -kInv4Pi * kernels::inverse_distance_sum(s.view(), y[0], y[1], y[2], eps * eps);
}

std::vector<Vec3> asymptotic_profile(const std::vector<ProfileSnapshot>& window,
                                     const std::vector<Vec3>& grid, double eps) {
    if (window.size() < 8)
        throw WindowError("asymptotic_profile: window holds " + std::to_string(window.size()) +
                          " snapshots, need at least 8");
    std::vector<Vec3> out(grid.size(), Vec3::Zero());
    for (const ProfileSnapshot& snap : window) {
        // t^2 E(t b) with sources at t a_j equals the field at b of sources a_j
        // with softening eps/t.
        const double se = eps / snap.t;
        std::vector<Vec3> E = efield_batch(grid, snap.a, snap.w, se);
        for (std::size_t k = 0; k < grid.size(); ++k) out[k] += E[k];
    }
    for (Vec3& e : out) e /= static_cast<double>(window.size());
    return out;
}

std::vector<double> asymptotic_potential(const std::vector<ProfileSnapshot>& window,
                                         const std::vector<Vec3>& grid, double eps) {
    if (window.size() < 8)
        throw WindowError("asymptotic_potential: window holds " + std::to_string(window.size()) +
                          " snapshots, need at least 8");
    std::vector<double> out(grid.size(), 0.0);
    for (const ProfileSnapshot& snap : window) {
        SoA s(snap.a, snap.w);
        const double se = eps / snap.t;
        for (std::size_t k = 0; k < grid.size(); ++k)
            out[k] -= kInv4Pi * kernels::inverse_distance_sum(s.view(), grid[k][0], grid[k][1], grid[k][2], se * se);
    }
    for (double& v : out) v /= static_cast<double>(window.size());
    return out;
}

Vec3 asymptotic_profile_at(const std::vector<ProfileSnapshot>& window, const Vec3& b, double eps) {
    return asymptotic_profile(window, {b}, eps)[0];
}

void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows) {
    os << "t,coord,psi,Ex,Ey,Ez\n";
    os.precision(17);
    for (const ProfileRow& r : rows)
        os << r.t << ',' << r.coord << ',' << r.psi << ',' << r.E[0] << ',' << r.E[1] << ',' << r.E[2]
           << '\n';
}

}  // namespace kaa
