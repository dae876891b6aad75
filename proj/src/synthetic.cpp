#include "groupenc/synthetic.hpp"

#include "groupenc/errors.hpp"
#include "groupenc/rng.hpp"

namespace groupenc {

DenseMatrix synthetic_mixture(const SyntheticConfig& config) {
    if (config.points == 0 || config.features == 0 || config.clusters == 0) {
        throw ConfigError("synthetic_mixture: zero size");
    }
    if (config.min_cluster_scale <= 0.0 ||
        config.max_cluster_scale < config.min_cluster_scale) {
        throw ConfigError("synthetic_mixture: bad cluster scale range");
    }

    SeededRng rng(config.seed, "synthetic");
    DenseMatrix centers(config.clusters, config.features);
    for (double& v : centers.data()) {
        v = config.center_scale * rng.next_normal();
    }
    std::vector<double> scales(config.clusters);
    for (double& s : scales) {
        s = config.min_cluster_scale +
            (config.max_cluster_scale - config.min_cluster_scale) * rng.next_double();
    }

    DenseMatrix points(config.points, config.features);
    const std::size_t base = config.points / config.clusters;
    const std::size_t remainder = config.points % config.clusters;
    std::size_t row = 0;
    for (std::size_t c = 0; c < config.clusters; ++c) {
        const std::size_t count = base + (c < remainder ? 1 : 0);
        const double* center = centers.row_ptr(c);
        for (std::size_t p = 0; p < count; ++p, ++row) {
            double* dst = points.row_ptr(row);
            for (Index j = 0; j < config.features; ++j) {
                dst[j] = center[j] + scales[c] * rng.next_normal();
            }
        }
    }
    return points;
}

} // namespace groupenc
