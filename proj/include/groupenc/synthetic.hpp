#pragma once

#include <cstdint>

#include "groupenc/matrix.hpp"

namespace groupenc {

/// Seeded Gaussian-mixture generator for the built-in benchmark dataset.
/// Cluster centres are drawn i.i.d. Gaussian (vertices of a random
/// simplex for clusters <= features + 1), so the data carries local
/// structure (the clusters) and global structure (the centre geometry).
struct SyntheticConfig {
    std::size_t points = 5000;
    Index features = 50;
    std::size_t clusters = 10;
    double center_scale = 10.0;
    // Per-cluster isotropic covariance scale, uniform in this range.
    double min_cluster_scale = 0.1;
    double max_cluster_scale = 1.0;
    std::uint64_t seed = 42;
};

DenseMatrix synthetic_mixture(const SyntheticConfig& config);

} // namespace groupenc
