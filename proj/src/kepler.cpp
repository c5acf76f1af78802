#include "kaa/kepler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kaa {

namespace {

double checked_radius(const Vec3& x) {
    double r = x.norm();
    if (!(r > 0) || !std::isfinite(r)) throw DomainError("position must satisfy 0 < |x| < inf");
    return r;
}

// (sqrt(1+w^2) - w)^2 without cancellation; equals P_- at rho = 1 + w^2 for w >= 0
// and P_+ for w < 0.
double pminus_w(double w) {
    double s = std::sqrt(1.0 + w * w);
    double m = w >= 0 ? 1.0 / (s + w) : s - w;
    return m * m;
}

// Implicit relation rewritten in the signed fold variable w = iota sqrt(rho-1):
// F(w) = w sqrt(1+w^2) + asinh(w) - kappa^2 (sqrt(1+w^2) - w)^2, strictly increasing.
double relation_w(double w, double k2) {
    return w * std::sqrt(1.0 + w * w) + std::asinh(w) - k2 * pminus_w(w);
}

double relation_w_prime(double w, double k2) {
    double s = std::sqrt(1.0 + w * w);
    return 2.0 * s + 2.0 * k2 * pminus_w(w) / s;
}

// Parameter k of the hyperbola through s: rho = cosh^2(k/2), sigma = -k/2, sign(k) = iota.
double fold_parameter(double a, double kappa2, double xv, double q) {
    double c = 1.0 + 4.0 * kappa2;
    return 0.5 * std::log1p(4.0 * kappa2) + std::asinh(2.0 * a * xv / (q * std::sqrt(c)));
}

}  // namespace

void Params::validate() const {
    if (!(q > 0)) throw DomainError("q must be positive (repulsive case)");
    if (!(Q >= 0) || !(Qc >= 0)) throw DomainError("couplings Q, Qc must be non-negative");
    if (!(mg > 0) || !(Mc > 0)) throw DomainError("masses mg, Mc must be positive");
}

double Params::pairing_defect() const {
    double gas = mg * q / 2.0;
    double charge = Mc * Qc / (4.0 * std::numbers::pi);
    return (gas - charge) / std::max(std::abs(gas), std::abs(charge));
}

double kfun(double s) {
    if (s < 1.0) throw DomainError("K(s) requires s >= 1");
    return std::sqrt(s * (s - 1.0)) - std::asinh(std::sqrt(s - 1.0));
}

double kfun_prime(double s) {
    if (s < 1.0) throw DomainError("K'(s) requires s >= 1");
    return std::sqrt(1.0 - 1.0 / s);
}

double gfun(double y) {
    if (y < 1.0) throw DomainError("G(y) requires y >= 1");
    return std::sqrt(y * (y - 1.0)) + std::asinh(std::sqrt(y - 1.0));
}

double pfun(int iota, double y) {
    if (y < 1.0) throw DomainError("P(y) requires y >= 1");
    double plus = std::sqrt(y) + std::sqrt(y - 1.0);
    plus *= plus;
    return iota > 0 ? plus : 1.0 / plus;
}

double dfun(double kappa, double y) {
    double c = kappa * kappa + 0.25;
    double s = std::sqrt(y * y + c);
    return y > 0 ? c / (s + y) : s - y;
}

double nfun(double kappa, double y) { return std::sqrt(y * y + kappa * kappa + 0.25) + 0.5; }

ConservedSet conserved(const PhaseState& s, const Params& p) {
    double r = checked_radius(s.x);
    ConservedSet c;
    c.H = s.v.squaredNorm() + p.q / r;
    c.L = s.x.cross(s.v);
    c.R = s.v.cross(c.L) + (0.5 * p.q / r) * s.x;
    return c;
}

Vec3 action(const PhaseState& s, const Params& p) {
    ConservedSet c = conserved(s, p);
    double den = 4.0 * c.H * c.L.squaredNorm() + p.q * p.q;
    return (2.0 * p.q * std::sqrt(c.H) / den) * c.R + (4.0 * c.H / den) * c.L.cross(c.R);
}

double rho_of_xa(const Vec3& x, const Vec3& a, const Params& p) {
    double an = a.norm();
    return an / (2.0 * p.q) * (x.norm() * an + a.dot(x));
}

double fold_tolerance(const PhaseState& s, const Params& p, double rel) {
    ConservedSet c = conserved(s, p);
    double sh = std::sqrt(c.H);
    return rel * (p.q / sh + s.x.norm() * s.v.norm() + sh * c.L.squaredNorm() / p.q);
}

Branch fold_branch(const PhaseState& s, const Params& p, double rel) {
    ConservedSet c = conserved(s, p);
    double g = s.x.dot(s.v) + std::sqrt(c.H) * c.L.squaredNorm() / p.q;
    if (std::abs(g) < fold_tolerance(s, p, rel)) return Branch::fold;
    return g > 0 ? Branch::plus : Branch::minus;
}

double generating(const Vec3& x, const Vec3& a, Branch iota, const Params& p) {
    double rho = rho_of_xa(x, a, p);
    if (rho < 1.0 - 1e-12) throw DomainError("generating function needs rho(x,a) >= 1");
    rho = std::max(rho, 1.0);
    double an = a.norm();
    return sign_of(iota) * (p.q / an) * kfun(rho) - 0.5 * (x.norm() * an - x.dot(a));
}

Vec3 generating_grad_x(const Vec3& x, const Vec3& a, Branch iota, const Params& p) {
    double rho = rho_of_xa(x, a, p);
    if (rho < 1.0 - 1e-12) throw DomainError("generating function needs rho(x,a) >= 1");
    rho = std::max(rho, 1.0);
    double an = a.norm();
    Vec3 xh = x / checked_radius(x);
    return (0.5 * sign_of(iota) * kfun_prime(rho)) * (an * xh + a) - 0.5 * (an * xh - a);
}

ActionAngle angle(const PhaseState& s, const Params& p) {
    double r = checked_radius(s.x);
    ConservedSet c = conserved(s, p);
    Vec3 av = action(s, p);
    double a = std::sqrt(c.H);
    double kappa2 = c.H * c.L.squaredNorm() / (p.q * p.q);
    double k = fold_parameter(a, kappa2, s.x.dot(s.v), p.q);
    Vec3 xh = s.x / r;
    Vec3 ah = av / av.norm();
    // iota K'(rho) = tanh(k/2) and sigma = -k/2 glue the two sheets smoothly.
    ActionAngle out;
    out.a = av;
    out.theta = (0.5 * r * std::tanh(0.5 * k)) * (xh + ah) + (0.5 * r) * (xh - ah) +
                (0.5 * p.q * k / c.H) * ah;
    out.branch = fold_branch(s, p);
    return out;
}

ActionAngle angle_on_branch(const PhaseState& s, Branch iota, const Params& p) {
    double r = checked_radius(s.x);
    Vec3 av = action(s, p);
    ConservedSet c = conserved(s, p);
    double a = std::sqrt(c.H);
    // sqrt(rho - 1) = |sinh(k/2)|, which keeps its digits as rho -> 1 where
    // forming rho - 1 directly would not.
    double k = fold_parameter(a, c.H * c.L.squaredNorm() / (p.q * p.q), s.x.dot(s.v), p.q);
    double w = std::abs(std::sinh(0.5 * k));
    int io = sign_of(iota);
    double sig = -io * std::asinh(w);
    Vec3 xh = s.x / r;
    Vec3 ah = av / av.norm();
    ActionAngle out;
    out.a = av;
    out.theta = (0.5 * io * r * w / std::sqrt(1.0 + w * w)) * (xh + ah) + (0.5 * r) * (xh - ah) -
                (p.q * sig / c.H) * ah;
    out.branch = iota;
    return out;
}

double rho_relation_residual(double eta, double kappa, Branch iota, double rho) {
    int io = sign_of(iota);
    return eta - io * gfun(rho) + kappa * kappa * pfun(-io, rho);
}

double solve_signed_w(double eta, double kappa) {
    const double k2 = kappa * kappa;
    if (!std::isfinite(eta) || !std::isfinite(k2)) throw DomainError("rho solve: non-finite input");
    double lo, hi, w;
    if (eta >= -k2) {
        lo = 0.0;
        hi = std::sqrt(k2 + eta);
        w = std::min(std::sqrt(std::max(eta, 0.0)), hi);
    } else {
        lo = -std::sqrt((-eta - k2) / (1.0 + k2));
        hi = 0.0;
        w = std::max(-std::sqrt(-eta / (1.0 + 4.0 * k2)), lo);
    }
    if (hi == lo) return lo;
    for (int it = 0; it < 200; ++it) {
        double f = relation_w(w, k2) - eta;
        if (f == 0.0) break;
        (f < 0 ? lo : hi) = w;
        double wn = w - f / relation_w_prime(w, k2);
        if (!(wn > lo && wn < hi)) wn = 0.5 * (lo + hi);
        double step = std::abs(wn - w);
        w = wn;
        if (step <= 2e-16 * std::abs(w) || hi - lo <= 2e-16 * std::max(std::abs(lo), std::abs(hi)))
            break;
    }
    return w;
}

namespace {

double branch_checked_w(double eta, double kappa, Branch iota) {
    const double k2 = kappa * kappa;
    const double tol = 1e-12 * (1.0 + std::abs(eta) + k2);
    const double g = eta + k2;
    if ((iota == Branch::plus && g < -tol) || (iota == Branch::minus && g > tol) ||
        (iota == Branch::fold && std::abs(g) > tol))
        throw BranchError("eta = " + std::to_string(eta) + " inconsistent with requested branch");
    double w = solve_signed_w(eta, kappa);
    if (iota == Branch::fold || w * sign_of(iota) < 0) w = 0.0;
    return w;
}

}  // namespace

double rho_solve(double eta, double kappa, Branch iota) {
    double w = branch_checked_w(eta, kappa, iota);
    return 1.0 + w * w;
}

RhoSigma sigma(double eta, double kappa, Branch iota) {
    double w = branch_checked_w(eta, kappa, iota);
    return {1.0 + w * w, -std::asinh(w), iota};
}

RhoSigma sigma(double eta, double kappa) {
    double w = solve_signed_w(eta, kappa);
    Branch b = w > 0 ? Branch::plus : (w < 0 ? Branch::minus : Branch::fold);
    return {1.0 + w * w, -std::asinh(w), b};
}

SICCoords to_sic(const ActionAngle& aa, const Params& p) {
    double a = aa.a.norm();
    if (!(a > 0)) throw DomainError("action must satisfy |a| > 0");
    SICCoords c;
    c.xi = p.q / a;
    c.u = aa.a / a;
    c.eta = a / p.q * aa.theta.dot(aa.a);
    c.L = aa.theta.cross(aa.a);
    return c;
}

SICCoords sic_of_state(const PhaseState& s, const Params& p) {
    ConservedSet cs = conserved(s, p);
    Vec3 av = action(s, p);
    double a = std::sqrt(cs.H);
    double kappa2 = cs.H * cs.L.squaredNorm() / (p.q * p.q);
    double xv = s.x.dot(s.v);
    SICCoords c;
    c.xi = p.q / a;
    c.u = av / av.norm();
    c.L = cs.L;
    c.eta = a * xv / p.q + 0.5 * fold_parameter(a, kappa2, xv, p.q);
    return c;
}

ActionAngle from_sic(const SICCoords& c, const Params& p) {
    ActionAngle aa;
    aa.a = (p.q / c.xi) * c.u;
    aa.theta = (c.xi * c.xi / p.q * c.eta) * c.u - (c.xi / p.q) * c.L.cross(c.u);
    double g = c.eta + c.L.squaredNorm() / (c.xi * c.xi);
    aa.branch = g > 0 ? Branch::plus : (g < 0 ? Branch::minus : Branch::fold);
    return aa;
}

namespace {

struct SicTerms {
    double y, D, N, cc;
    Vec3 lu;
};

SicTerms sic_terms(const SICCoords& c) {
    if (!(c.xi != 0) || !std::isfinite(c.xi)) throw DomainError("SIC coordinates need finite xi != 0");
    const double k2 = c.L.squaredNorm() / (c.xi * c.xi);
    SicTerms t;
    t.cc = 1.0 + 4.0 * k2;
    t.y = c.eta - std::asinh(solve_signed_w(c.eta, std::sqrt(k2)));
    const double s = std::sqrt(t.y * t.y + k2 + 0.25);
    t.D = t.y > 0 ? (k2 + 0.25) / (s + t.y) : s - t.y;
    t.N = s + 0.5;
    t.lu = c.L.cross(c.u);
    return t;
}

}  // namespace

PhaseState phase_state(const SICCoords& c, const Params& p) {
    const SicTerms k = sic_terms(c);
    const double xi = c.xi, q = p.q;
    PhaseState out;
    out.x = (xi * xi / q * (k.y + 0.5 + k.D / k.cc)) * c.u - (xi / q * (1.0 + 2.0 * k.D / k.cc)) * k.lu;
    out.v = (q / xi * (1.0 - 0.5 / k.N - k.D / (k.cc * k.N))) * c.u + (q / (xi * xi) * 2.0 / k.cc * k.D / k.N) * k.lu;
    return out;
}

Vec3 velocity_offset(const SICCoords& c, const Params& p) {
    const SicTerms k = sic_terms(c);
    const double xi = c.xi, q = p.q;
    return (-q / xi * (0.5 + k.D / k.cc) / k.N) * c.u + (q / (xi * xi) * 2.0 / k.cc * k.D / k.N) * k.lu;
}

Vec3 position(const SICCoords& c, const Params& p) { return phase_state(c, p).x; }
Vec3 velocity(const SICCoords& c, const Params& p) { return phase_state(c, p).v; }

PhaseState to_phase(const ActionAngle& aa, const Params& p) { return phase_state(to_sic(aa, p), p); }

double radius_from_invariants(double a, double lambda, double xv, const Params& p) {
    double q = p.q;
    double t1 = (4.0 * a * a * lambda * lambda + q * q) / (q * q);
    double t2 = 4.0 * a * a * xv * xv / (q * q);
    return q / (2.0 * a * a) * (1.0 + std::sqrt(t1 + t2));
}

ActionAngle linear_flow(const ActionAngle& aa, double t) {
    ActionAngle out = aa;
    out.theta += t * aa.a;
    return out;
}

SICCoords linear_flow(const SICCoords& c, double t, const Params& p) {
    SICCoords out = c;
    out.eta += t * p.q * p.q / (c.xi * c.xi * c.xi);
    return out;
}

PhaseState kepler_propagate(const PhaseState& s, double t, const Params& p) {
    if (t == 0.0) {
        checked_radius(s.x);
        return s;
    }
    return phase_state(linear_flow(sic_of_state(s, p), t, p), p);
}

double periapsis_eta(double kappa) { return 0.25 * std::log1p(4.0 * kappa * kappa); }

Periapsis periapsis(const PhaseState& s, const Params& p) {
    SICCoords c = sic_of_state(s, p);
    double eta_p = periapsis_eta(c.kappa());
    Periapsis out;
    out.t = (eta_p - c.eta) * c.xi * c.xi * c.xi / (p.q * p.q);
    c.eta = eta_p;
    out.state = phase_state(c, p);
    return out;
}

SICCoords past_coords(const SICCoords& c) {
    double k2 = c.L.squaredNorm() / (c.xi * c.xi);
    double cc = 1.0 + 4.0 * k2;
    SICCoords m;
    m.xi = -c.xi;
    m.eta = -c.eta + 0.5 * std::log1p(4.0 * k2);
    m.L = c.L;
    m.u = ((1.0 - 4.0 * k2) * c.u - (4.0 / c.xi) * c.L.cross(c.u)) / cc;
    return m;
}

std::vector<Vec3> scattering_solutions(const Vec3& x0, const Vec3& a, const Params& p) {
    checked_radius(x0);
    if (!(a.norm() > 0)) throw DomainError("action must satisfy |a| > 0");
    double rho = rho_of_xa(x0, a, p);
    const double tol = 1e-12;
    if (rho < 1.0 - tol) return {};
    if (std::abs(rho - 1.0) <= tol) return {generating_grad_x(x0, a, Branch::fold, p)};
    return {generating_grad_x(x0, a, Branch::minus, p), generating_grad_x(x0, a, Branch::plus, p)};
}

}  // namespace kaa
