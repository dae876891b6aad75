#include "groupenc/kernels.hpp"

#include <cmath>

namespace groupenc::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double b1, double b2,
                        double eps, double inv_bc1, double inv_bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar",
        dot_scalar,
        axpy_scalar,
        squared_distance_scalar,
        adam_update_scalar,
    };
    return table;
}

} // namespace groupenc::kernels
