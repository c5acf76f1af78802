#include "kaa/rk_oracle.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace kaa {

namespace {

namespace ode = boost::numeric::odeint;

// (x, v, t) evolved in the regularized time s with dt/ds = |x|, which spreads
// the steps evenly through the close approach.
using State = std::array<double, 7>;

struct Rhs {
    double half_q;
    void operator()(const State& z, State& dz, double) const {
        const double r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
        if (!(r2 > 0)) throw DomainError("oracle trajectory reached the origin");
        const double r = std::sqrt(r2);
        const double f = half_q / r2;
        for (int k = 0; k < 3; ++k) {
            dz[k] = r * z[3 + k];
            dz[3 + k] = f * z[k];
        }
        dz[6] = r;
    }
};

double radius(const State& z) { return std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]); }

PhaseState unpack(const State& z) { return {Vec3(z[0], z[1], z[2]), Vec3(z[3], z[4], z[5])}; }

class Integrator {
public:
    Integrator(const PhaseState& s, const Params& p, double tol)
        : rhs_{0.5 * p.q}, ctrl_(ode::make_controlled(tol, tol, Stepper())) {
        z_ = {s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2], 0.0};
    }

    double t() const { return z_[6]; }
    const State& state() const { return z_; }

    void advance_to(double target) {
        const double dir = target >= t() ? 1.0 : -1.0;
        if (dir * ds_ < 0) ds_ = -ds_;
        for (int guard = 0; guard < 10000000; ++guard) {
            const double rem = target - t();
            if (std::abs(rem) <= 1e-15 * (1 + std::abs(target))) return;
            // A step of ds covers roughly |x| ds in time; land exactly on target
            // once the next step would reach it.
            if (std::abs(ds_) * radius(z_) >= std::abs(rem)) {
                if (finish(target)) return;
                continue;
            }
            const State before = z_;
            double s = 0, ds = ds_;
            const ode::controlled_step_result res = ctrl_.try_step(rhs_, z_, s, ds);
            if (res == ode::success && dir * (t() - target) > 0) {
                // |x| grew during the step; redo it as the exact final step.
                z_ = before;
                if (finish(target)) return;
                continue;
            }
            ds_ = ds;
            if (!std::isfinite(ds_) || ds_ == 0) throw DomainError("rk_oracle: step size collapsed");
        }
        throw DomainError("rk_oracle: too many steps");
    }

private:
    using Stepper = ode::runge_kutta_fehlberg78<State>;

    // Final partial step: Newton on the step length so that t(ds) = target,
    // using dt/ds = |x|. The step is then retaken through the controller; if
    // its error estimate rejects it, half of it is taken instead and the
    // caller loops. Returns true when target was reached.
    bool finish(double target) {
        double ds = (target - t()) / radius(z_);
        State out;
        for (int it = 0; it < 8; ++it) {
            out = z_;
            stepper_.do_step(rhs_, out, 0.0, ds);
            const double g = out[6] - target;
            if (std::abs(g) <= 1e-15 * (1 + std::abs(target))) break;
            ds -= g / radius(out);
        }
        State trial = z_;
        double s = 0, dss = ds;
        if (ctrl_.try_step(rhs_, trial, s, dss) == ode::success) {
            z_ = out;
            z_[6] = target;
            return true;
        }
        ds_ = 0.5 * ds;
        return false;
    }

    Rhs rhs_;
    decltype(ode::make_controlled(1.0, 1.0, Stepper())) ctrl_;
    Stepper stepper_;
    State z_;
    double ds_ = 1e-3;
};

}  // namespace

std::vector<PhaseState> rk_trajectory(const PhaseState& s, const std::vector<double>& times, const Params& p,
                                      double tol) {
    if (!(tol > 0)) throw std::invalid_argument("rk_oracle: tol must be positive");
    if (!(s.x.norm() > 0)) throw DomainError("rk_oracle: |x| = 0");
    std::vector<PhaseState> out;
    out.reserve(times.size());
    Integrator in(s, p, tol);
    for (double target : times) {
        in.advance_to(target);
        out.push_back(unpack(in.state()));
    }
    return out;
}

PhaseState rk_oracle(const PhaseState& s, double t, const Params& p, double tol) {
    return rk_trajectory(s, {t}, p, tol).front();
}

}  // namespace kaa
