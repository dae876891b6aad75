#pragma once

#include <cstddef>
#include <string>

namespace groupenc::kernels {

// Inner-loop arithmetic kernels. Every entry point has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorised variant. The
// active table is chosen once at startup from CPUID, overridable through
// GROUPENC_SIMD=scalar|avx2|auto (useful for equivalence tests and for
// pinning down numeric differences).
//
// SIMD variants are equivalence-tested against the scalar reference. They
// are not bit-identical (lane-parallel accumulators and FMA change the
// rounding sequence) but agree to ~1e-13 relative; within one process the
// dispatch is fixed, so all higher-level determinism contracts hold.

struct KernelTable {
    const char* name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);

    // sum_i (a[i] - b[i])^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);

    // Adam with bias correction folded into inv_bc1/inv_bc2:
    //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
    //   p -= lr * (m*inv_bc1) / (sqrt(v*inv_bc2) + eps)
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double b1, double b2,
                        double eps, double inv_bc1, double inv_bc2);
};

const KernelTable& scalar_table();

// Null when the binary has no AVX2 translation unit or the CPU lacks
// AVX2/FMA.
const KernelTable* avx2_table();

const KernelTable& active_table();

// Name of the table active_table() resolves to ("scalar" or "avx2").
std::string active_level_name();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active_table().dot(a, b, n);
}

inline void axpy(double* y, double alpha, const double* x, std::size_t n) {
    active_table().axpy(y, alpha, x, n);
}

inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return active_table().squared_distance(a, b, n);
}

inline void adam_update(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double b1, double b2,
                        double eps, double inv_bc1, double inv_bc2) {
    active_table().adam_update(p, m, v, g, n, lr, b1, b2, eps, inv_bc1, inv_bc2);
}

} // namespace groupenc::kernels
