#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "groupenc/matrix.hpp"

namespace groupenc {

// Structure-preservation scoring from neighbour ranks. Q_NX(K) is the
// average shared fraction of HD and LD K-neighbourhoods, R_NX(K) corrects
// it for chance, and the two SP scores are R_NX AUCs under log-K and
// linear-K weighting. Everything here streams per reference point: no
// N x N matrix is ever materialised, each worker holds O(N) scratch, and
// intersection counts stay integers until one final division, so results
// are bit-identical for any worker count.

/// Neighbour rank of every point with respect to `reference`, by ascending
/// distance, ties broken by ascending point index. rank[reference] = 0,
/// all other entries are a permutation of 1..N-1.
std::vector<std::int32_t> neighbor_ranks(const DenseMatrix& points, std::size_t reference);

struct RankProfile {
    std::size_t reference_index = 0;
    // c[K-1] = |nu_i^K  intersect  n_i^K| for K = 1..N-1
    std::vector<std::int64_t> intersection_profile;
};

/// Streaming intersection sizes: neighbour j joins both K-neighbourhoods
/// at K = max(hd_rank, ld_rank); the profile is the running count.
/// Inputs are full-length rank vectors as produced by neighbor_ranks.
RankProfile intersection_profile(std::span<const std::int32_t> hd_ranks,
                                 std::span<const std::int32_t> ld_ranks,
                                 std::size_t reference);

/// Q_NX(K) for K = 1..N-1 (index K-1), aggregated over all reference
/// points. `workers` 0 means default_worker_count().
std::vector<double> qnx_curve(const DenseMatrix& hd, const DenseMatrix& ld,
                              std::size_t workers = 0);

/// R_NX(K) = ((N-1) Q_NX(K) - K) / (N-1-K) for K = 1..N-2; the K = N-1
/// point is excluded (zero denominator, Q_NX there is identically 1).
std::vector<double> rnx_curve(std::span<const double> qnx, std::size_t n);

struct AucScores {
    double local_sp = 0.0;   // harmonic (1/K) weights: log-K area
    double global_sp = 0.0;  // uniform weights: linear-K area
};

AucScores auc_scores(std::span<const double> rnx, std::size_t n);

struct RnxResult {
    std::size_t n = 0;  // points actually evaluated (after subsampling)
    std::vector<double> qnx;  // K = 1..N-1
    std::vector<double> rnx;  // K = 1..N-2
    double local_sp = 0.0;
    double global_sp = 0.0;
    std::optional<std::size_t> subsample;
};

struct EvalStats {
    std::size_t workers = 0;
    std::size_t peak_scratch_bytes = 0;  // all evaluator-side allocation
};

/// Full pipeline. When `subsample` is set, a seeded uniform row subset is
/// drawn (sorted order) and both matrices are restricted to it first.
RnxResult evaluate(const DenseMatrix& hd, const DenseMatrix& ld,
                   std::optional<std::size_t> subsample = {}, std::uint64_t seed = 0,
                   EvalStats* stats = nullptr, std::size_t workers = 0);

/// Worker cap: GROUPENC_THREADS when set, else hardware concurrency.
std::size_t default_worker_count();

/// Delimited text, header K,qnx,rnx; the rnx field is empty on the last
/// row (K = N-1).
void write_curve(std::ostream& out, const RnxResult& result);

/// Key-value block: local_sp, global_sp, n, subsample.
void write_scores(std::ostream& out, const RnxResult& result);

} // namespace groupenc
