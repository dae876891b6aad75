#include "groupenc/distances.hpp"

#include <cmath>

#include "groupenc/errors.hpp"
#include "groupenc/kernels.hpp"

namespace groupenc {

std::vector<double> pairwise_euclidean(const DenseMatrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) {
        throw ShapeError("pairwise_euclidean: need at least 2 rows");
    }
    std::vector<double> out(condensed_size(n));
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double* pi = points.row_ptr(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            out[k++] = std::sqrt(kernels::squared_distance(pi, points.row_ptr(j), points.cols()));
        }
    }
    return out;
}

void pairwise_euclidean_rows(const DenseMatrix& points,
                             std::span<const std::uint32_t> rows,
                             std::span<double> out) {
    const std::size_t n = rows.size();
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double* pi = points.row_ptr(rows[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            out[k++] = std::sqrt(
                kernels::squared_distance(pi, points.row_ptr(rows[j]), points.cols()));
        }
    }
}

void squared_distances_to_row(const DenseMatrix& points, std::size_t reference,
                              std::span<double> out) {
    const double* ref = points.row_ptr(reference);
    for (std::size_t j = 0; j < points.rows(); ++j) {
        out[j] = kernels::squared_distance(ref, points.row_ptr(j), points.cols());
    }
    out[reference] = 0.0;
}

} // namespace groupenc
