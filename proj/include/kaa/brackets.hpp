#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kaa/kepler.hpp"

namespace kaa {

struct ScalarField {
    std::function<double(const PhaseState&)> eval;
    std::string label;
};

/// Vector-valued observable; brackets between all its components come from one Jacobian.
using VectorObservable = std::function<Eigen::VectorXd(const PhaseState&)>;

/// Central-difference Jacobian of F at s; columns are (x1,x2,x3,v1,v2,v3).
/// Coordinate k is stepped by h*(1+|z_k|).
Eigen::MatrixXd phase_jacobian(const VectorObservable& F, const PhaseState& s, double h = 1e-5);

/// {f,g} = grad_x f . grad_v g - grad_v f . grad_x g by central differences.
double pb_numeric(const ScalarField& f, const ScalarField& g, const PhaseState& s, double h = 1e-5);

/// Bracket computed in angle-action coordinates: f, g are functions of (theta, a).
double pb_action_angle(const std::function<double(const ActionAngle&)>& f,
                       const std::function<double(const ActionAngle&)>& g, const ActionAngle& aa,
                       double h = 1e-5);

struct RelationResidual {
    std::string name;
    double numeric = 0;
    double expected = 0;
    double residual = 0;
};

struct BracketReport {
    std::vector<RelationResidual> entries;
    double max_residual = 0;
    std::string worst;
    void add(std::string name, double numeric, double expected, double scale);
    bool pass(double tol) const { return max_residual < tol; }
};

/// Residuals of the super-integrable bracket table at s. Each residual is
/// |numeric - expected| / max(1, sum of |terms| of the bracket), so the
/// tolerance is relative to the cancellation the difference quotient has to resolve.
BracketReport check_sic_table(const PhaseState& s, const Params& p, double h = 1e-5);
/// Same table for the past coordinates.
BracketReport check_past_sic_table(const PhaseState& s, const Params& p, double h = 1e-5);
/// {theta^j, a^k} = delta_jk, {theta^j, theta^k} = {a^j, a^k} = 0 at s, plus the
/// Jacobian determinant of (x,v) -> (theta,a) (reported as entry "det-1").
BracketReport check_action_angle_brackets(const PhaseState& s, const Params& p, double h = 1e-5);
/// Brackets of (a, xi, lambda) with the flowed position and velocity at time t.
BracketReport check_xv_brackets(const PhaseState& s, double t, const Params& p, double h = 1e-5);

/// |{f,{g,k}} + {g,{k,f}} + {k,{f,g}}| with nested differences; the outer
/// step is sqrt(h).
double jacobi_residual(const ScalarField& f, const ScalarField& g, const ScalarField& k,
                       const PhaseState& s, double h = 1e-5);

}  // namespace kaa
