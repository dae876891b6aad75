// AVX2+FMA kernel variants. This translation unit is the only one built
// with -mavx2 -mfma; callers reach it through the dispatch table, never
// directly, so the rest of the binary stays runnable on baseline x86-64.

#include "groupenc/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace groupenc::kernels {

namespace {

inline double reduce_add_f64x4(__m256d x) {
    __m128d lo = _mm256_castpd256_pd128(x);
    __m128d hi = _mm256_extractf128_pd(x, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = reduce_add_f64x4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    }
    double acc = reduce_add_f64x4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double b1, double b2,
                      double eps, double inv_bc1, double inv_bc2) {
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d vb2 = _mm256_set1_pd(b2);
    const __m256d vc1 = _mm256_set1_pd(1.0 - b1);
    const __m256d vc2 = _mm256_set1_pd(1.0 - b2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(inv_bc1);
    const __m256d vibc2 = _mm256_set1_pd(inv_bc2);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_fmadd_pd(vc1, gi, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vi = _mm256_fmadd_pd(vc2, _mm256_mul_pd(gi, gi),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d denom =
            _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vibc2)), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        const double gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        p[i] -= lr * (m[i] * inv_bc1) / (std::sqrt(v[i] * inv_bc2) + eps);
    }
}

} // namespace

const KernelTable* avx2_table_impl() {
    static const KernelTable table{
        "avx2",
        dot_avx2,
        axpy_avx2,
        squared_distance_avx2,
        adam_update_avx2,
    };
    return &table;
}

} // namespace groupenc::kernels
