#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace groupenc {

/// Deterministic random stream derived from a 64-bit seed and a short
/// stream label ("init", "shuffle", "groups", "noise", ...). The core is
/// SplitMix64 over pure 64-bit integer arithmetic, so sequences are
/// identical across platforms and compilers. Distinct labels under the
/// same seed give independent streams.
///
/// Instances are cheap value types; each thread or training run derives
/// its own. The full generator state is a single 64-bit word, which makes
/// checkpoint/resume exact.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::string_view stream_label);

    std::uint64_t seed() const { return seed_; }
    const std::string& stream_label() const { return label_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double next_double();

    /// Uniform in (0, 1]; used where log(u) must stay finite.
    double next_double_open();

    /// Uniform integer in [0, bound), bias-free via rejection.
    std::uint64_t next_below(std::uint64_t bound);

    /// Standard normal draw (Box-Muller, no cached second value so the
    /// state stays a single word).
    double next_normal();

    void fill_normal(std::span<double> out);

    /// Uniform random permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::uint32_t> permutation(std::size_t n);

    /// Sorted uniform sample of k distinct values from 0..n-1.
    std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::uint64_t state() const { return state_; }
    void restore_state(std::uint64_t state) { state_ = state; }

private:
    std::uint64_t seed_ = 0;
    std::string label_;
    std::uint64_t state_ = 0;
};

} // namespace groupenc
