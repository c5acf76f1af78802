#include "field_kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __AVX512F__
#include <immintrin.h>
#endif

namespace kaa::kernels {

namespace {

inline double pair_factor(double dx, double dy, double dz, double eps2) {
    const double s2 = dx * dx + dy * dy + dz * dz + eps2;
    return s2 > 0 ? 1.0 / (s2 * std::sqrt(s2)) : 0.0;
}

#ifdef __AVX512F__
// s2^{-3/2} from the 14-bit hardware estimate and two Newton steps (relative
// error ~1e-16); zero where s2 == 0.
inline __m512d inv_s3(__m512d s2) {
    const __m512d half = _mm512_set1_pd(0.5), three_halves = _mm512_set1_pd(1.5);
    __m512d y = _mm512_rsqrt14_pd(s2);
    const __m512d hs = _mm512_mul_pd(half, s2);
    y = _mm512_mul_pd(y, _mm512_fnmadd_pd(hs, _mm512_mul_pd(y, y), three_halves));
    y = _mm512_mul_pd(y, _mm512_fnmadd_pd(hs, _mm512_mul_pd(y, y), three_halves));
    const __mmask8 nz = _mm512_cmp_pd_mask(s2, _mm512_setzero_pd(), _CMP_GT_OQ);
    return _mm512_maskz_mul_pd(nz, _mm512_mul_pd(y, y), y);
}

inline __m512d dist2(__m512d dx, __m512d dy, __m512d dz, __m512d e2) {
    return _mm512_fmadd_pd(dx, dx, _mm512_fmadd_pd(dy, dy, _mm512_fmadd_pd(dz, dz, e2)));
}
#endif

void target_row(const Sources& src, double px, double py, double pz, double eps2, double& ox,
                double& oy, double& oz) {
    const double* sx = src.x;
    const double* sy = src.y;
    const double* sz = src.z;
    const double* sw = src.w;
    const std::size_t n = src.n;
    std::size_t i = 0;
    double bx = 0, by = 0, bz = 0;
#ifdef __AVX512F__
    const __m512d vx = _mm512_set1_pd(px), vy = _mm512_set1_pd(py), vz = _mm512_set1_pd(pz);
    const __m512d e2 = _mm512_set1_pd(eps2);
    __m512d ax = _mm512_setzero_pd(), ay = ax, az = ax;
    for (; i + 8 <= n; i += 8) {
        const __m512d dx = _mm512_sub_pd(vx, _mm512_loadu_pd(sx + i));
        const __m512d dy = _mm512_sub_pd(vy, _mm512_loadu_pd(sy + i));
        const __m512d dz = _mm512_sub_pd(vz, _mm512_loadu_pd(sz + i));
        const __m512d f = _mm512_mul_pd(inv_s3(dist2(dx, dy, dz, e2)), _mm512_loadu_pd(sw + i));
        ax = _mm512_fmadd_pd(f, dx, ax);
        ay = _mm512_fmadd_pd(f, dy, ay);
        az = _mm512_fmadd_pd(f, dz, az);
    }
    bx = _mm512_reduce_add_pd(ax);
    by = _mm512_reduce_add_pd(ay);
    bz = _mm512_reduce_add_pd(az);
#endif
    for (; i < n; ++i) {
        const double dx = px - sx[i], dy = py - sy[i], dz = pz - sz[i];
        const double f = sw[i] * pair_factor(dx, dy, dz, eps2);
        bx += f * dx;
        by += f * dy;
        bz += f * dz;
    }
    ox += bx;
    oy += by;
    oz += bz;
}

void self_symmetric(const Sources& src, double eps2, double* ex, double* ey, double* ez) {
    const double* sx = src.x;
    const double* sy = src.y;
    const double* sz = src.z;
    const double* sw = src.w;
    const std::size_t n = src.n;
    for (std::size_t k = 0; k < n; ++k) {
        const double px = sx[k], py = sy[k], pz = sz[k], wk = sw[k];
        double bx = 0, by = 0, bz = 0;
        std::size_t i = k + 1;
        auto scalar_pair = [&](std::size_t j) {
            const double dx = px - sx[j], dy = py - sy[j], dz = pz - sz[j];
            const double r = pair_factor(dx, dy, dz, eps2);
            bx += sw[j] * r * dx;
            by += sw[j] * r * dy;
            bz += sw[j] * r * dz;
            ex[j] -= wk * r * dx;
            ey[j] -= wk * r * dy;
            ez[j] -= wk * r * dz;
        };
#ifdef __AVX512F__
        for (; i < n && (i & 7); ++i) scalar_pair(i);
        const __m512d vx = _mm512_set1_pd(px), vy = _mm512_set1_pd(py), vz = _mm512_set1_pd(pz);
        const __m512d vw = _mm512_set1_pd(wk), e2 = _mm512_set1_pd(eps2);
        __m512d ax = _mm512_setzero_pd(), ay = ax, az = ax;
        for (; i + 8 <= n; i += 8) {
            const __m512d dx = _mm512_sub_pd(vx, _mm512_loadu_pd(sx + i));
            const __m512d dy = _mm512_sub_pd(vy, _mm512_loadu_pd(sy + i));
            const __m512d dz = _mm512_sub_pd(vz, _mm512_loadu_pd(sz + i));
            const __m512d r = inv_s3(dist2(dx, dy, dz, e2));
            const __m512d f = _mm512_mul_pd(r, _mm512_loadu_pd(sw + i));
            ax = _mm512_fmadd_pd(f, dx, ax);
            ay = _mm512_fmadd_pd(f, dy, ay);
            az = _mm512_fmadd_pd(f, dz, az);
            const __m512d g = _mm512_mul_pd(r, vw);
            _mm512_storeu_pd(ex + i, _mm512_fnmadd_pd(g, dx, _mm512_loadu_pd(ex + i)));
            _mm512_storeu_pd(ey + i, _mm512_fnmadd_pd(g, dy, _mm512_loadu_pd(ey + i)));
            _mm512_storeu_pd(ez + i, _mm512_fnmadd_pd(g, dz, _mm512_loadu_pd(ez + i)));
        }
        bx += _mm512_reduce_add_pd(ax);
        by += _mm512_reduce_add_pd(ay);
        bz += _mm512_reduce_add_pd(az);
#endif
        for (; i < n; ++i) scalar_pair(i);
        ex[k] += bx;
        ey[k] += by;
        ez[k] += bz;
    }
}

}  // namespace

void efield_sum(const Sources& src, const double* tx, const double* ty, const double* tz,
                std::size_t m, double eps2, double* ex, double* ey, double* ez) {
#pragma omp parallel for schedule(static) if (m > 16)
    for (std::size_t k = 0; k < m; ++k) target_row(src, tx[k], ty[k], tz[k], eps2, ex[k], ey[k], ez[k]);
}

void efield_self(const Sources& src, double eps2, double* ex, double* ey, double* ez) {
#ifdef _OPENMP
    if (omp_get_max_threads() > 1) {
        efield_sum(src, src.x, src.y, src.z, src.n, eps2, ex, ey, ez);
        return;
    }
#endif
    self_symmetric(src, eps2, ex, ey, ez);
}

double inverse_distance_sum(const Sources& src, double tx, double ty, double tz, double eps2) {
    double acc = 0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < src.n; ++i) {
        const double dx = tx - src.x[i], dy = ty - src.y[i], dz = tz - src.z[i];
        const double s2 = dx * dx + dy * dy + dz * dz + eps2;
        acc += s2 > 0 ? src.w[i] / std::sqrt(s2) : 0.0;
    }
    return acc;
}

double pair_potential_sum(const Sources& src, double eps2) {
    const std::size_t n = src.n;
    double total = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : total)
    for (std::size_t k = 0; k < n; ++k) {
        const double px = src.x[k], py = src.y[k], pz = src.z[k];
        double acc = 0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t i = k + 1; i < n; ++i) {
            const double dx = px - src.x[i], dy = py - src.y[i], dz = pz - src.z[i];
            const double s2 = dx * dx + dy * dy + dz * dz + eps2;
            acc += s2 > 0 ? src.w[i] / std::sqrt(s2) : 0.0;
        }
        total += src.w[k] * acc;
    }
    return total;
}

}  // namespace kaa::kernels
