#pragma once

#include <vector>

#include "kaa/kepler.hpp"

namespace kaa {

/// Adaptive embedded Runge-Kutta (Fehlberg 7(8)) solution of x' = v,
/// v' = (q/2) x/|x|^3 with absolute and relative local tolerance tol. The
/// steps are taken in the regularized time s with dt/ds = |x|.
/// Negative t integrates backwards. Shares no code with the closed-form transforms.
PhaseState rk_oracle(const PhaseState& s, double t, const Params& p, double tol = 1e-12);

/// States at the requested times (monotone, starting from time 0 at s).
std::vector<PhaseState> rk_trajectory(const PhaseState& s, const std::vector<double>& times, const Params& p,
                                      double tol = 1e-12);

}  // namespace kaa
