#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kaa/kepler.hpp"

namespace kaa {

struct Check {
    std::string name;
    double value = 0;  // worst residual or ratio observed
    double tol = 0;    // pass iff value < tol (value <= tol for count checks)
    bool pass = true;
    std::string argmax;  // sample that produced value
    std::size_t samples = 0;
};

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    /// Largest value/tol over the checks; below 1 exactly when every check passes.
    double max_residual = 0;
    std::string argmax;
    std::map<std::string, double> fitted_constants;
    std::vector<Check> checks;
    double seconds = 0;
    bool pass = true;

    void add(Check c);
    const Check* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

std::vector<std::string> suite_names();
/// Throws std::invalid_argument for an unknown name.
SuiteReport run_suite(const std::string& name, std::uint64_t seed, std::size_t n);
std::size_t default_samples(const std::string& name);

/// Round trip (x,v) -> (theta,a) -> (x,v) on n samples, one percent of them
/// within 1e-3 of the fold, plus the invariants |A|^2 = H, L.A = 0,
/// theta x a = x x v, branch agreement on the fold and the rescaling symmetry.
SuiteReport suite_roundtrip(std::uint64_t seed, std::size_t n);
/// Jacobian determinant, canonical brackets, bracket tables and Jacobi identity.
SuiteReport suite_canonicity(std::uint64_t seed, std::size_t n);
/// Exact flow against the RK oracle, d theta/dt = A along oracle trajectories,
/// group laws and oracle self-checks.
SuiteReport suite_flow(std::uint64_t seed, std::size_t n);
/// Constant-explicit bounds (asserted) and implicit-constant bounds (fitted).
SuiteReport suite_bounds(std::uint64_t seed, std::size_t n);
/// Past/future coordinates, periapsis anchors, past bracket table and
/// close/far region crossings.
SuiteReport suite_transitions(std::uint64_t seed, std::size_t n);

/// Residual sweep of the implicit rho relation over rho in [1, 1e10].
Check rho_residual_sweep(std::uint64_t seed, std::size_t n);

}  // namespace kaa
