#include "groupenc/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "groupenc/errors.hpp"
#include "groupenc/kernels.hpp"

namespace groupenc {

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index r = rows.size();
    const Index c = r > 0 ? rows.begin()->size() : 0;
    DenseMatrix m(r, c);
    Index i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("from_rows: ragged initializer");
        }
        Index j = 0;
        for (double v : row) {
            m(i, j++) = v;
        }
        ++i;
    }
    return m;
}

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void DenseMatrix::fill(double value) {
    for (double& v : data_) {
        v = value;
    }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()));
    }
    DenseMatrix c(a.rows(), b.cols());
    // ikj order: the inner update is an axpy over a contiguous row of b,
    // and every c(i,j) accumulates over k in a fixed order.
    for (Index i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (Index k = 0; k < a.cols(); ++k) {
            kernels::axpy(ci, ai[k], b.row_ptr(k), b.cols());
        }
    }
    return c;
}

DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_transpose_a: row counts " + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()));
    }
    DenseMatrix c(a.cols(), b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        const double* bi = b.row_ptr(i);
        for (Index k = 0; k < a.cols(); ++k) {
            kernels::axpy(c.row_ptr(k), ai[k], bi, b.cols());
        }
    }
    return c;
}

DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_transpose_b: column counts " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()));
    }
    DenseMatrix c(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (Index j = 0; j < b.rows(); ++j) {
            ci[j] = kernels::dot(ai, b.row_ptr(j), a.cols());
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols(), m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            t(j, i) = m(i, j);
        }
    }
    return t;
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::uint32_t> indices) {
    DenseMatrix out(indices.size(), m.cols());
    for (Index i = 0; i < indices.size(); ++i) {
        const double* src = m.row_ptr(indices[i]);
        double* dst = out.row_ptr(i);
        for (Index j = 0; j < m.cols(); ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> sums(m.cols(), 0.0);
    for (Index i = 0; i < m.rows(); ++i) {
        kernels::axpy(sums.data(), 1.0, m.row_ptr(i), m.cols());
    }
    return sums;
}

} // namespace groupenc
