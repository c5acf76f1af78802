#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <vector>

namespace kaa {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Thrown for inputs outside the domain of a transform (|x| = 0, |a| = 0, rho < 1, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Thrown by the rho solver when (eta, branch) are inconsistent.
struct BranchError : DomainError {
    using DomainError::DomainError;
};

/// Physical constants. q couples gas and charge, Q is the gas self coupling,
/// Qc the gas-to-charge coupling; mg and Mc are the masses.
/// Momentum is exchanged consistently only when mg*q/2 == Mc*Qc/(4 pi),
/// which the default Mc = 2 pi satisfies.
struct Params {
    double q = 1.0;
    double Q = 1.0;
    double Qc = 1.0;
    double mg = 1.0;
    double Mc = 6.283185307179586;

    void validate() const;
    /// mg*q/2 - Mc*Qc/(4 pi), relative; zero when gas-charge forces pair exactly.
    double pairing_defect() const;
};

struct PhaseState {
    Vec3 x = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

struct ConservedSet {
    double H = 0;
    Vec3 L = Vec3::Zero();
    Vec3 R = Vec3::Zero();
};

/// Fold tag: plus on the outgoing sheet, minus on the incoming one.
enum class Branch : int { minus = -1, fold = 0, plus = 1 };

inline int sign_of(Branch b) { return static_cast<int>(b); }

struct ActionAngle {
    Vec3 theta = Vec3::Zero();
    Vec3 a = Vec3::Zero();
    Branch branch = Branch::plus;
};

/// Super-integrable coordinates. L is stored as a vector so that the
/// radial case L = 0 needs no special treatment.
struct SICCoords {
    double xi = 0;
    double eta = 0;
    Vec3 L = Vec3::Zero();
    Vec3 u = Vec3::UnitX();

    double lambda() const { return L.norm(); }
    double kappa() const { return L.norm() / xi; }
};

struct RhoSigma {
    double rho = 1;
    double sigma = 0;
    Branch branch = Branch::plus;
};

// Scalar helpers.
double kfun(double s);        // K(s) = sqrt(s(s-1)) - ln(sqrt s + sqrt(s-1))
double kfun_prime(double s);  // sqrt(1 - 1/s)
double gfun(double y);        // G(y) = sqrt(y(y-1)) + ln(sqrt y + sqrt(y-1))
double pfun(int iota, double y);  // P_iota(y) = 2y - 1 + iota*2 sqrt(y(y-1))
double dfun(double kappa, double y);
double nfun(double kappa, double y);

ConservedSet conserved(const PhaseState& s, const Params& p);
Vec3 action(const PhaseState& s, const Params& p);
double rho_of_xa(const Vec3& x, const Vec3& a, const Params& p);

/// Absolute tolerance on x.v + sqrt(H) L^2/q below which a point counts as on the fold.
double fold_tolerance(const PhaseState& s, const Params& p, double rel = 1e-10);
Branch fold_branch(const PhaseState& s, const Params& p, double rel = 1e-10);

double generating(const Vec3& x, const Vec3& a, Branch iota, const Params& p);
/// Gradient in x of the generating function of the given branch.
Vec3 generating_grad_x(const Vec3& x, const Vec3& a, Branch iota, const Params& p);

/// Forward transform (x, v) -> (theta, a). The branch-glued closed form is used,
/// so the result is smooth across the fold.
ActionAngle angle(const PhaseState& s, const Params& p);
/// Same closed form evaluated literally on a chosen branch; only meaningful
/// when that branch contains the point (or on the fold).
ActionAngle angle_on_branch(const PhaseState& s, Branch iota, const Params& p);

/// Residual eta - iota G(rho) + kappa^2 P_{-iota}(rho) of the implicit relation.
double rho_relation_residual(double eta, double kappa, Branch iota, double rho);
double rho_solve(double eta, double kappa, Branch iota);
RhoSigma sigma(double eta, double kappa, Branch iota);
/// Branch-free variant: the branch is read off from the sign of eta + kappa^2.
RhoSigma sigma(double eta, double kappa);
/// Signed fold variable w = iota sqrt(rho - 1) solving the implicit relation.
double solve_signed_w(double eta, double kappa);

SICCoords to_sic(const ActionAngle& aa, const Params& p);
/// SIC of a physical state without forming theta (eta = (a/q) x.v - sigma).
SICCoords sic_of_state(const PhaseState& s, const Params& p);
ActionAngle from_sic(const SICCoords& c, const Params& p);

Vec3 position(const SICCoords& c, const Params& p);
Vec3 velocity(const SICCoords& c, const Params& p);
PhaseState phase_state(const SICCoords& c, const Params& p);
/// v - a, formed without subtracting the two; stays accurate when v is within round-off of a.
Vec3 velocity_offset(const SICCoords& c, const Params& p);
/// Inverse transform (theta, a) -> (x, v).
PhaseState to_phase(const ActionAngle& aa, const Params& p);
/// |x| from the conserved quantities and x.v.
double radius_from_invariants(double a, double lambda, double xv, const Params& p);

ActionAngle linear_flow(const ActionAngle& aa, double t);
SICCoords linear_flow(const SICCoords& c, double t, const Params& p);
PhaseState kepler_propagate(const PhaseState& s, double t, const Params& p);

struct Periapsis {
    double t = 0;
    PhaseState state;
};
Periapsis periapsis(const PhaseState& s, const Params& p);
double periapsis_eta(double kappa);

SICCoords past_coords(const SICCoords& c);

/// Velocities at x0 whose trajectories have asymptotic velocity a, ordered by
/// increasing angular momentum (incoming sheet first).
std::vector<Vec3> scattering_solutions(const Vec3& x0, const Vec3& a, const Params& p);

}  // namespace kaa
