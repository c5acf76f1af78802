#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kaa/kepler.hpp"

namespace kaa {

using Rng = std::mt19937_64;

Vec3 random_direction(Rng& rng);
double log_uniform(Rng& rng, double lo, double hi);

/// Test-point distribution for the property suites: log-uniform a in [0.1, 10],
/// log-uniform |x| in [0.1, 100], uniform directions; draws with a^2 <= q/|x|
/// (no real velocity) are rejected.
PhaseState sample_phase(Rng& rng, const Params& p);
std::vector<PhaseState> sample_phase_batch(std::uint64_t seed, std::size_t n, const Params& p);

/// Points within |eta + kappa^2| <= width of the fold, both sides.
PhaseState sample_near_fold(Rng& rng, const Params& p, double width = 1e-3);

/// (x, v, q) -> (s x, v / s, q / s): rho, eta and kappa are invariant.
PhaseState rescale(const PhaseState& s, double scale);
Params rescale(const Params& p, double scale);

/// Angle-action pair (pulled back to t = 0) in the bulk region at time t.
/// Throws DomainError when the region is empty at that t.
ActionAngle sample_bulk(Rng& rng, double t, const Params& p);

/// a + xi <= (q/<q>) t^{1/4}/10 and xi|eta| + lambda <= 1e-3 t a^2, with
/// <r> = sqrt(4 + r^2) and (eta, lambda) those of the pulled-back angle.
bool in_bulk(const ActionAngle& pulled_back, double t, const Params& p);
/// Smallest t for which the bulk region can be nonempty.
double bulk_onset_time(const Params& p);

}  // namespace kaa
