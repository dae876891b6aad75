#include "groupenc/rnx.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

#include "groupenc/distances.hpp"
#include "groupenc/errors.hpp"
#include "groupenc/rng.hpp"
#include "groupenc/text_format.hpp"

namespace groupenc {

namespace {

// O(N) per-worker scratch; the evaluator's whole footprint is this times
// the worker count plus the output curves.
struct WorkerScratch {
    std::vector<double> dist_hd, dist_ld;
    std::vector<std::uint32_t> order;
    std::vector<std::int32_t> rank_hd, rank_ld;
    std::vector<std::int64_t> joins;  // joins[K]: neighbours entering at K

    explicit WorkerScratch(std::size_t n)
        : dist_hd(n), dist_ld(n), order(n > 0 ? n - 1 : 0), rank_hd(n), rank_ld(n),
          joins(n, 0) {}

    std::size_t bytes() const {
        return dist_hd.capacity() * sizeof(double) + dist_ld.capacity() * sizeof(double) +
               order.capacity() * sizeof(std::uint32_t) +
               rank_hd.capacity() * sizeof(std::int32_t) +
               rank_ld.capacity() * sizeof(std::int32_t) +
               joins.capacity() * sizeof(std::int64_t);
    }
};

// Ranks by ascending distance with ties broken by ascending index. Works
// on squared distances; the ordering is the same.
void rank_from_distances(const std::vector<double>& dist, std::size_t reference,
                         std::vector<std::uint32_t>& order, std::vector<std::int32_t>& rank) {
    const std::size_t n = dist.size();
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j != reference) {
            order[k++] = static_cast<std::uint32_t>(j);
        }
    }
    std::sort(order.begin(), order.end(), [&dist](std::uint32_t a, std::uint32_t b) {
        if (dist[a] != dist[b]) {
            return dist[a] < dist[b];
        }
        return a < b;
    });
    rank[reference] = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank[order[r]] = static_cast<std::int32_t>(r + 1);
    }
}

void process_reference(const DenseMatrix& hd, const DenseMatrix& ld, std::size_t i,
                       WorkerScratch& scratch) {
    squared_distances_to_row(hd, i, scratch.dist_hd);
    squared_distances_to_row(ld, i, scratch.dist_ld);
    rank_from_distances(scratch.dist_hd, i, scratch.order, scratch.rank_hd);
    rank_from_distances(scratch.dist_ld, i, scratch.order, scratch.rank_ld);
    const std::size_t n = hd.rows();
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
            continue;
        }
        const std::int32_t join_at = std::max(scratch.rank_hd[j], scratch.rank_ld[j]);
        scratch.joins[static_cast<std::size_t>(join_at)] += 1;
    }
}

std::vector<double> qnx_from_joins(const std::vector<std::int64_t>& joins, std::size_t n) {
    std::vector<double> qnx(n - 1);
    std::int64_t cumulative = 0;
    for (std::size_t k = 1; k < n; ++k) {
        cumulative += joins[k];
        qnx[k - 1] = static_cast<double>(cumulative) /
                     (static_cast<double>(k) * static_cast<double>(n));
    }
    return qnx;
}

} // namespace

std::size_t default_worker_count() {
    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) {
        workers = 1;
    }
    if (const char* env = std::getenv("GROUPENC_THREADS")) {
        try {
            const std::uint64_t cap = parse_u64(env);
            if (cap >= 1 && cap < workers) {
                workers = cap;
            }
        } catch (const FormatError&) {
            // Unparseable cap is ignored.
        }
    }
    return workers;
}

std::vector<std::int32_t> neighbor_ranks(const DenseMatrix& points, std::size_t reference) {
    const std::size_t n = points.rows();
    if (n < 2) {
        throw ShapeError("neighbor_ranks: need at least 2 rows");
    }
    if (reference >= n) {
        throw ShapeError("neighbor_ranks: reference out of range");
    }
    std::vector<double> dist(n);
    squared_distances_to_row(points, reference, {dist.data(), n});
    std::vector<std::uint32_t> order(n - 1);
    std::vector<std::int32_t> rank(n);
    rank_from_distances(dist, reference, order, rank);
    return rank;
}

RankProfile intersection_profile(std::span<const std::int32_t> hd_ranks,
                                 std::span<const std::int32_t> ld_ranks,
                                 std::size_t reference) {
    const std::size_t n = hd_ranks.size();
    if (n < 2 || ld_ranks.size() != n || reference >= n) {
        throw ShapeError("intersection_profile: bad input sizes");
    }
    auto check_permutation = [&](std::span<const std::int32_t> ranks, const char* side) {
        std::vector<bool> seen(n, false);
        for (std::size_t j = 0; j < n; ++j) {
            const std::int32_t r = ranks[j];
            if (j == reference) {
                if (r != 0) {
                    throw Error(std::string("intersection_profile: ") + side +
                                " rank at reference must be 0");
                }
                continue;
            }
            if (r < 1 || static_cast<std::size_t>(r) > n - 1 || seen[r]) {
                throw Error(std::string("intersection_profile: ") + side +
                            " ranks are not a permutation of 1..N-1");
            }
            seen[r] = true;
        }
    };
    check_permutation(hd_ranks, "hd");
    check_permutation(ld_ranks, "ld");

    std::vector<std::int64_t> joins(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == reference) {
            continue;
        }
        joins[static_cast<std::size_t>(std::max(hd_ranks[j], ld_ranks[j]))] += 1;
    }
    RankProfile profile;
    profile.reference_index = reference;
    profile.intersection_profile.resize(n - 1);
    std::int64_t cumulative = 0;
    for (std::size_t k = 1; k < n; ++k) {
        cumulative += joins[k];
        profile.intersection_profile[k - 1] = cumulative;
    }
    return profile;
}

namespace {

std::vector<double> qnx_curve_impl(const DenseMatrix& hd, const DenseMatrix& ld,
                                   std::size_t workers, std::size_t* scratch_bytes) {
    if (hd.rows() != ld.rows()) {
        throw ShapeError("qnx_curve: row counts differ");
    }
    const std::size_t n = hd.rows();
    if (n < 3) {
        throw ShapeError("qnx_curve: need at least 3 rows");
    }
    if (workers == 0) {
        workers = default_worker_count();
    }
    workers = std::min(workers, n);

    std::size_t bytes = 0;
    std::vector<std::int64_t> joins_total(n, 0);
    bytes += joins_total.capacity() * sizeof(std::int64_t);

    if (workers <= 1) {
        WorkerScratch scratch(n);
        for (std::size_t i = 0; i < n; ++i) {
            process_reference(hd, ld, i, scratch);
        }
        joins_total = std::move(scratch.joins);
        bytes += scratch.bytes();
    } else {
        std::vector<std::vector<std::int64_t>> partials(workers);
        std::vector<std::size_t> worker_bytes(workers, 0);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w]() {
                WorkerScratch scratch(n);
                const std::size_t begin = n * w / workers;
                const std::size_t end = n * (w + 1) / workers;
                for (std::size_t i = begin; i < end; ++i) {
                    process_reference(hd, ld, i, scratch);
                }
                worker_bytes[w] = scratch.bytes();
                partials[w] = std::move(scratch.joins);
            });
        }
        for (std::thread& t : threads) {
            t.join();
        }
        // Integer merge in fixed worker order: identical for any schedule.
        for (std::size_t w = 0; w < workers; ++w) {
            for (std::size_t k = 0; k < n; ++k) {
                joins_total[k] += partials[w][k];
            }
            bytes += worker_bytes[w];
        }
    }
    if (scratch_bytes != nullptr) {
        *scratch_bytes = bytes;
    }
    return qnx_from_joins(joins_total, n);
}

} // namespace

std::vector<double> qnx_curve(const DenseMatrix& hd, const DenseMatrix& ld,
                              std::size_t workers) {
    return qnx_curve_impl(hd, ld, workers, nullptr);
}

std::vector<double> rnx_curve(std::span<const double> qnx, std::size_t n) {
    if (qnx.size() != n - 1) {
        throw ShapeError("rnx_curve: expected N-1 qnx values");
    }
    std::vector<double> rnx(n - 2);
    const double nm1 = static_cast<double>(n - 1);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        rnx[k - 1] = (nm1 * qnx[k - 1] - static_cast<double>(k)) /
                     (nm1 - static_cast<double>(k));
    }
    return rnx;
}

AucScores auc_scores(std::span<const double> rnx, std::size_t n) {
    if (rnx.size() != n - 2) {
        throw ShapeError("auc_scores: expected N-2 rnx values");
    }
    AucScores scores;
    double weighted_sum = 0.0;
    double weight_total = 0.0;
    double plain_sum = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double weight = 1.0 / static_cast<double>(k);
        weighted_sum += rnx[k - 1] * weight;
        weight_total += weight;
        plain_sum += rnx[k - 1];
    }
    scores.local_sp = weighted_sum / weight_total;
    scores.global_sp = plain_sum / static_cast<double>(n - 2);
    return scores;
}

RnxResult evaluate(const DenseMatrix& hd, const DenseMatrix& ld,
                   std::optional<std::size_t> subsample, std::uint64_t seed,
                   EvalStats* stats, std::size_t workers) {
    if (hd.rows() != ld.rows()) {
        throw ShapeError("evaluate: row counts differ");
    }
    if (subsample && *subsample > hd.rows()) {
        throw ConfigError("evaluate: subsample larger than row count");
    }

    const bool restricted = subsample && *subsample < hd.rows();
    DenseMatrix hd_sub, ld_sub;
    if (restricted) {
        SeededRng rng(seed, "subsample");
        const std::vector<std::uint32_t> keep =
            rng.sample_without_replacement(hd.rows(), *subsample);
        hd_sub = gather_rows(hd, keep);
        ld_sub = gather_rows(ld, keep);
    }
    const DenseMatrix& hd_eval = restricted ? hd_sub : hd;
    const DenseMatrix& ld_eval = restricted ? ld_sub : ld;

    if (workers == 0) {
        workers = default_worker_count();
    }
    workers = std::min(workers, hd_eval.rows());

    RnxResult result;
    result.n = hd_eval.rows();
    result.subsample = subsample;
    std::size_t scratch_bytes = 0;
    result.qnx = qnx_curve_impl(hd_eval, ld_eval, workers, &scratch_bytes);
    result.rnx = rnx_curve(result.qnx, result.n);
    const AucScores scores = auc_scores(result.rnx, result.n);
    result.local_sp = scores.local_sp;
    result.global_sp = scores.global_sp;

    if (stats != nullptr) {
        stats->workers = workers;
        stats->peak_scratch_bytes = scratch_bytes +
                                    result.qnx.capacity() * sizeof(double) +
                                    result.rnx.capacity() * sizeof(double);
    }
    return result;
}

void write_curve(std::ostream& out, const RnxResult& result) {
    out << "K,qnx,rnx\n";
    for (std::size_t k = 1; k < result.n; ++k) {
        out << k << ',' << format_double(result.qnx[k - 1]) << ',';
        if (k - 1 < result.rnx.size()) {
            out << format_double(result.rnx[k - 1]);
        }
        out << '\n';
    }
}

void write_scores(std::ostream& out, const RnxResult& result) {
    out << "local_sp=" << format_double(result.local_sp) << '\n';
    out << "global_sp=" << format_double(result.global_sp) << '\n';
    out << "n=" << result.n << '\n';
    out << "subsample=" << (result.subsample ? std::to_string(*result.subsample) : "none")
        << '\n';
}

} // namespace groupenc
