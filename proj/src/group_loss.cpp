#include "groupenc/group_loss.hpp"

#include <cmath>
#include <string>

#include "groupenc/distances.hpp"
#include "groupenc/errors.hpp"
#include "groupenc/kernels.hpp"

namespace groupenc {

namespace {

// Guard added to normalisation denominators; smooths the degenerate-group
// boundary and stays far below test tolerances for regular groups.
constexpr double kDenomGuard = 1e-12;

// Below this a pair of LD points is treated as coincident and contributes
// no direction to the gradient.
constexpr double kTinyDistance = 1e-300;

struct GroupScratch {
    std::vector<double> hd_raw, ld_raw, hd_norm, ld_norm;

    void resize(std::size_t pairs) {
        hd_raw.resize(pairs);
        ld_raw.resize(pairs);
        hd_norm.resize(pairs);
        ld_norm.resize(pairs);
    }
};

// Cost of one group; when grad_accum is non-null, accumulates
// weight * d(cost)/d(ld rows) into the member rows of grad_accum.
double group_cost_core(const DenseMatrix& hd, const DenseMatrix& ld,
                       std::span<const std::uint32_t> members, GroupScratch& scratch,
                       DenseMatrix* grad_accum, double weight, bool& degenerate_hd,
                       bool& degenerate_ld) {
    const std::size_t gamma = members.size();
    const std::size_t pairs = condensed_size(gamma);
    scratch.resize(pairs);

    pairwise_euclidean_rows(hd, members, scratch.hd_raw);
    pairwise_euclidean_rows(ld, members, scratch.ld_raw);

    degenerate_hd = !normalize_group_distances(scratch.hd_raw, scratch.hd_norm);
    degenerate_ld = !normalize_group_distances(scratch.ld_raw, scratch.ld_norm);

    double cost = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const double e = scratch.ld_norm[k] - scratch.hd_norm[k];
        cost += e * e;
    }

    // A degenerate LD group has no usable directions; its normalisation is
    // pinned to the uniform profile and contributes zero gradient.
    if (grad_accum == nullptr || degenerate_ld) {
        return cost;
    }

    double sum_ld = 0.0;
    for (double d : scratch.ld_raw) {
        sum_ld += d;
    }
    const double denom = sum_ld + kDenomGuard;

    double t_term = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        t_term += (scratch.ld_norm[k] - scratch.hd_norm[k]) * scratch.ld_norm[k];
    }

    const Index w = ld.cols();
    std::size_t k = 0;
    for (std::size_t a = 0; a + 1 < gamma; ++a) {
        const double* ya = ld.row_ptr(members[a]);
        double* ga = grad_accum->row_ptr(members[a]);
        for (std::size_t b = a + 1; b < gamma; ++b, ++k) {
            const double dist = scratch.ld_raw[k];
            if (dist < kTinyDistance) {
                continue;
            }
            const double e = scratch.ld_norm[k] - scratch.hd_norm[k];
            const double coef = weight * 2.0 / denom * (e - t_term) / dist;
            const double* yb = ld.row_ptr(members[b]);
            double* gb = grad_accum->row_ptr(members[b]);
            for (Index j = 0; j < w; ++j) {
                const double step = coef * (ya[j] - yb[j]);
                ga[j] += step;
                gb[j] -= step;
            }
        }
    }
    return cost;
}

} // namespace

const char* group_strategy_name(GroupStrategy strategy) {
    return strategy == GroupStrategy::headed ? "headed" : "disjoint";
}

GroupStrategy parse_group_strategy(std::string_view name) {
    if (name == "headed") {
        return GroupStrategy::headed;
    }
    if (name == "disjoint") {
        return GroupStrategy::disjoint;
    }
    throw ConfigError("unknown group strategy: " + std::string(name));
}

GroupAssignment assign_groups(std::size_t batch_size, std::uint32_t gamma,
                              GroupStrategy strategy, SeededRng& rng) {
    if (gamma < 2) {
        throw ConfigError("assign_groups: gamma must be at least 2");
    }
    if (batch_size < gamma) {
        throw ConfigError("assign_groups: batch size " + std::to_string(batch_size) +
                          " smaller than gamma " + std::to_string(gamma));
    }
    GroupAssignment assignment;
    assignment.gamma = gamma;
    assignment.strategy = strategy;
    assignment.batch_size = batch_size;

    const std::vector<std::uint32_t> perm = rng.permutation(batch_size);
    if (strategy == GroupStrategy::headed) {
        // The shuffle defines a cyclic order; every point heads the group
        // of itself plus the next gamma-1 points along the cycle. Groups
        // are stored so that group i is the one headed by point i.
        assignment.flat.resize(batch_size * gamma);
        for (std::size_t k = 0; k < batch_size; ++k) {
            const std::uint32_t head = perm[k];
            std::uint32_t* group = assignment.flat.data() +
                                   static_cast<std::size_t>(head) * gamma;
            for (std::uint32_t t = 0; t < gamma; ++t) {
                group[t] = perm[(k + t) % batch_size];
            }
        }
    } else {
        const std::size_t group_count = batch_size / gamma;
        assignment.flat.assign(perm.begin(), perm.begin() + group_count * gamma);
    }
    return assignment;
}

bool normalize_group_distances(std::span<const double> raw, std::span<double> out) {
    if (raw.size() != out.size() || raw.empty()) {
        throw ShapeError("normalize_group_distances: bad profile length");
    }
    double sum = 0.0;
    for (double d : raw) {
        sum += d;
    }
    if (sum <= 0.0) {
        const double uniform = 1.0 / static_cast<double>(raw.size());
        for (double& v : out) {
            v = uniform;
        }
        return false;
    }
    const double inv = 1.0 / (sum + kDenomGuard);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = raw[i] * inv;
    }
    return true;
}

GroupGeometry group_geometry(const DenseMatrix& hd_points, const DenseMatrix& ld_points) {
    if (hd_points.rows() != ld_points.rows() || hd_points.rows() < 2) {
        throw ShapeError("group_geometry: need matching row counts >= 2");
    }
    GroupGeometry geometry;
    geometry.hd_raw = pairwise_euclidean(hd_points);
    geometry.ld_raw = pairwise_euclidean(ld_points);
    geometry.hd_norm.resize(geometry.hd_raw.size());
    geometry.ld_norm.resize(geometry.ld_raw.size());
    geometry.degenerate_hd = !normalize_group_distances(geometry.hd_raw, geometry.hd_norm);
    geometry.degenerate_ld = !normalize_group_distances(geometry.ld_raw, geometry.ld_norm);
    for (std::size_t k = 0; k < geometry.hd_norm.size(); ++k) {
        const double e = geometry.ld_norm[k] - geometry.hd_norm[k];
        geometry.cost += e * e;
    }
    return geometry;
}

GroupCostResult group_cost(const DenseMatrix& hd_points, const DenseMatrix& ld_points) {
    if (hd_points.rows() != ld_points.rows() || hd_points.rows() < 2) {
        throw ShapeError("group_cost: need matching row counts >= 2");
    }
    const std::size_t gamma = hd_points.rows();
    std::vector<std::uint32_t> members(gamma);
    for (std::size_t i = 0; i < gamma; ++i) {
        members[i] = static_cast<std::uint32_t>(i);
    }
    GroupCostResult result;
    result.ld_grad = DenseMatrix(ld_points.rows(), ld_points.cols());
    GroupScratch scratch;
    result.cost = group_cost_core(hd_points, ld_points, members, scratch, &result.ld_grad,
                                  1.0, result.degenerate_hd, result.degenerate_ld);
    return result;
}

BatchGroupLossResult batch_group_loss(const DenseMatrix& hd_batch, const DenseMatrix& ld_batch,
                                      const GroupAssignment& assignment) {
    if (hd_batch.rows() != ld_batch.rows() || hd_batch.rows() != assignment.batch_size) {
        throw ShapeError("batch_group_loss: batch row counts do not match assignment");
    }
    const std::size_t group_count = assignment.group_count();
    if (group_count == 0) {
        throw ShapeError("batch_group_loss: empty assignment");
    }

    // headed: B groups, each point inherits the cost of the group it
    // heads, so the batch mean weights every group by 1/B. disjoint: each
    // covered point inherits its group's cost; the mean over covered
    // points weights every group by 1/group_count.
    const double weight = 1.0 / static_cast<double>(group_count);

    BatchGroupLossResult result;
    result.ld_grad = DenseMatrix(ld_batch.rows(), ld_batch.cols());
    GroupScratch scratch;
    double loss = 0.0;
    for (std::size_t g = 0; g < group_count; ++g) {
        bool degenerate_hd = false;
        bool degenerate_ld = false;
        loss += group_cost_core(hd_batch, ld_batch, assignment.group(g), scratch,
                                &result.ld_grad, weight, degenerate_hd, degenerate_ld);
        if (degenerate_hd || degenerate_ld) {
            result.degenerate_groups += 1;
        }
    }
    result.loss = loss * weight;
    return result;
}

} // namespace groupenc
