#include "kaa/sampling.hpp"

#include <cmath>
#include <numbers>

namespace kaa {

namespace {

double bracket4(double r) { return std::sqrt(4.0 + r * r); }

Vec3 perpendicular_unit(Rng& rng, const Vec3& u) {
    Vec3 d;
    do {
        d = random_direction(rng);
        d -= d.dot(u) * u;
    } while (d.norm() < 1e-3);
    return d.normalized();
}

}  // namespace

Vec3 random_direction(Rng& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> phi(0.0, 2 * std::numbers::pi);
    const double z = U(rng), f = phi(rng), r = std::sqrt(std::max(0.0, 1 - z * z));
    return {r * std::cos(f), r * std::sin(f), z};
}

double log_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> U(std::log(lo), std::log(hi));
    return std::exp(U(rng));
}

PhaseState sample_phase(Rng& rng, const Params& p) {
    for (;;) {
        const double a = log_uniform(rng, 0.1, 10.0);
        const double r = log_uniform(rng, 0.1, 100.0);
        const double v2 = a * a - p.q / r;
        if (!(v2 > 0)) continue;
        return {r * random_direction(rng), std::sqrt(v2) * random_direction(rng)};
    }
}

std::vector<PhaseState> sample_phase_batch(std::uint64_t seed, std::size_t n, const Params& p) {
    Rng rng(seed);
    std::vector<PhaseState> out(n);
    for (auto& s : out) s = sample_phase(rng, p);
    return out;
}

PhaseState sample_near_fold(Rng& rng, const Params& p, double width) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    SICCoords c;
    const double a = log_uniform(rng, 0.1, 10.0);
    c.xi = p.q / a;
    const double kappa = U(rng) < 0.1 ? 0.0 : log_uniform(rng, 1e-3, 30.0);
    c.u = random_direction(rng);
    c.L = kappa * c.xi * perpendicular_unit(rng, c.u);
    // Offsets spread over many decades so the fold neighbourhood is resolved
    // all the way down to round-off.
    const double delta = width * std::pow(10.0, -12.0 * U(rng)) * (U(rng) < 0.5 ? -1.0 : 1.0);
    c.eta = -kappa * kappa + delta;
    return phase_state(c, p);
}

PhaseState rescale(const PhaseState& s, double scale) { return {scale * s.x, s.v / scale}; }

Params rescale(const Params& p, double scale) {
    Params out = p;
    out.q = p.q / scale;
    return out;
}

double bulk_onset_time(const Params& p) {
    return std::pow(20.0 * bracket4(p.q) / std::sqrt(p.q), 4);
}

bool in_bulk(const ActionAngle& aa, double t, const Params& p) {
    const double a = aa.a.norm();
    if (!(a > 0) || !(t > 0)) return false;
    const SICCoords c = to_sic(aa, p);
    const double lhs1 = a + c.xi;
    const double rhs1 = (p.q / bracket4(p.q)) * std::pow(t, 0.25) / 10.0;
    const double lhs2 = c.xi * std::abs(c.eta) + c.lambda();
    const double rhs2 = 1e-3 * t * a * a;
    return lhs1 <= rhs1 && lhs2 <= rhs2;
}

ActionAngle sample_bulk(Rng& rng, double t, const Params& p) {
    const double B = (p.q / bracket4(p.q)) * std::pow(t, 0.25) / 10.0;
    const double disc = B * B - 4 * p.q;
    if (!(disc > 0)) throw DomainError("bulk region is empty at this time");
    // a + q/a <= B  <=>  a between the two roots.
    const double a_lo = (B - std::sqrt(disc)) / 2, a_hi = (B + std::sqrt(disc)) / 2;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    SICCoords c;
    const double a = a_lo + (a_hi - a_lo) * U(rng);
    c.xi = p.q / a;
    c.u = random_direction(rng);
    const double budget = 1e-3 * t * a * a * U(rng);
    const double share = U(rng);
    c.L = share * budget * perpendicular_unit(rng, c.u);
    c.eta = (1 - share) * budget / c.xi * (U(rng) < 0.5 ? -1.0 : 1.0);
    return from_sic(c, p);
}

}  // namespace kaa
