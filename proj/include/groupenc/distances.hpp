#pragma once

#include <span>
#include <vector>

#include "groupenc/matrix.hpp"

namespace groupenc {

/// Index of pair (i, j), i < j, in the condensed upper-triangular layout
/// (0,1),(0,2),...,(0,n-1),(1,2),...,(n-2,n-1).
inline std::size_t condensed_index(std::size_t n, std::size_t i, std::size_t j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

inline std::size_t condensed_size(std::size_t n) {
    return n * (n - 1) / 2;
}

/// All pairwise Euclidean distances between rows, condensed layout.
/// Requires at least 2 rows.
std::vector<double> pairwise_euclidean(const DenseMatrix& points);

/// Pairwise Euclidean distances between the listed rows only (condensed
/// over the index list, in list order).
void pairwise_euclidean_rows(const DenseMatrix& points,
                             std::span<const std::uint32_t> rows,
                             std::span<double> out);

/// Squared distances from row `reference` to every row, out[reference]=0.
void squared_distances_to_row(const DenseMatrix& points, std::size_t reference,
                              std::span<double> out);

} // namespace groupenc
