#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groupenc/matrix.hpp"
#include "groupenc/rng.hpp"

namespace groupenc {

// Scale-agnostic group loss. Distances inside a group of gamma points are
// normalised by the sum of all pairwise distances in that group; the group
// cost is the squared difference between the high- and low-dimensional
// normalised profiles. gamma = 4 recovers the quartet cost.

enum class GroupStrategy : std::uint8_t {
    headed,    // one group per batch point, point first in its own group
    disjoint,  // shuffle and chop, remainder dropped
};

const char* group_strategy_name(GroupStrategy strategy);
GroupStrategy parse_group_strategy(std::string_view name);

struct GroupAssignment {
    std::uint32_t gamma = 0;
    GroupStrategy strategy = GroupStrategy::headed;
    std::size_t batch_size = 0;
    // group_count x gamma index tuples, row-major, indices into the batch
    std::vector<std::uint32_t> flat;

    std::size_t group_count() const { return gamma == 0 ? 0 : flat.size() / gamma; }
    std::span<const std::uint32_t> group(std::size_t g) const {
        return {flat.data() + g * gamma, gamma};
    }
};

/// headed: shuffle defines a cyclic order; the group headed by point i is
/// (i, next gamma-1 points in cyclic order), one group per batch point,
/// listed so that group i has head i. disjoint: shuffle, chop into
/// floor(batch/gamma) consecutive groups, drop the remainder.
GroupAssignment assign_groups(std::size_t batch_size, std::uint32_t gamma,
                              GroupStrategy strategy, SeededRng& rng);

/// Divides each entry by the sum of all entries (plus a 1e-12 guard).
/// Returns false for an all-zero profile, in which case `out` is filled
/// with the uniform profile.
bool normalize_group_distances(std::span<const double> raw, std::span<double> out);

/// Raw and normalised distance profiles of one group plus its cost;
/// mirrors what group_cost computes, kept for inspection and tests.
struct GroupGeometry {
    std::vector<double> hd_raw, ld_raw;
    std::vector<double> hd_norm, ld_norm;
    double cost = 0.0;
    bool degenerate_hd = false;
    bool degenerate_ld = false;
};

GroupGeometry group_geometry(const DenseMatrix& hd_points, const DenseMatrix& ld_points);

struct GroupCostResult {
    double cost = 0.0;
    DenseMatrix ld_grad;  // gamma x w, exact derivative; HD treated constant
    bool degenerate_hd = false;
    bool degenerate_ld = false;
};

/// Cost of one group given its HD and LD coordinates (gamma rows each)
/// and the exact gradient with respect to the LD coordinates.
GroupCostResult group_cost(const DenseMatrix& hd_points, const DenseMatrix& ld_points);

struct BatchGroupLossResult {
    double loss = 0.0;
    DenseMatrix ld_grad;  // batch x w
    std::size_t degenerate_groups = 0;
};

/// Mean over per-point group costs; the gradient of that mean w.r.t. the
/// LD batch. Under headed every point inherits the cost of the group it
/// heads; under disjoint every covered point inherits its group's cost.
BatchGroupLossResult batch_group_loss(const DenseMatrix& hd_batch, const DenseMatrix& ld_batch,
                                      const GroupAssignment& assignment);

} // namespace groupenc
