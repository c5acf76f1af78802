#pragma once

#include <cstddef>

namespace kaa::kernels {

// Structure-of-arrays source set.
struct Sources {
    const double* x;
    const double* y;
    const double* z;
    const double* w;
    std::size_t n;
};

// out[k] += sum_i w_i (t_k - s_i) / (|t_k - s_i|^2 + eps2)^{3/2}, without the 1/(4 pi).
// Pairs at zero separation with eps2 == 0 contribute nothing.
void efield_sum(const Sources& src, const double* tx, const double* ty, const double* tz,
                std::size_t m, double eps2, double* ex, double* ey, double* ez);

// Same sum with the sources as targets. Single-threaded runs visit each pair
// once and apply it to both ends.
void efield_self(const Sources& src, double eps2, double* ex, double* ey, double* ez);

// sum_i w_i / sqrt(|t - s_i|^2 + eps2), skipping coincident pairs when eps2 == 0.
double inverse_distance_sum(const Sources& src, double tx, double ty, double tz, double eps2);

}  // namespace kaa::kernels

namespace kaa::kernels {

// sum_{i<j} w_i w_j / sqrt(|s_i - s_j|^2 + eps2).
double pair_potential_sum(const Sources& src, double eps2);

}  // namespace kaa::kernels
