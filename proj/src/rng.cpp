#include "groupenc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace groupenc {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

} // namespace

SeededRng::SeededRng(std::uint64_t seed, std::string_view stream_label)
    : seed_(seed), label_(stream_label) {
    state_ = mix64(mix64(seed + kGolden) ^ fnv1a64(stream_label));
}

std::uint64_t SeededRng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double SeededRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
    if (bound <= 1) {
        return 0;
    }
    // Rejection sampling on the top of the range keeps the draw exactly
    // uniform for any bound.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t x = next_u64();
    while (x > limit) {
        x = next_u64();
    }
    return x % bound;
}

double SeededRng::next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SeededRng::fill_normal(std::span<double> out) {
    for (double& v : out) {
        v = next_normal();
    }
}

std::vector<std::uint32_t> SeededRng::permutation(std::size_t n) {
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t i = n; i > 1; --i) {
        const std::uint64_t j = next_below(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<std::uint32_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::uint32_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) {
        pool[i] = static_cast<std::uint32_t>(i);
    }
    // Partial Fisher-Yates: the first k slots end up a uniform sample.
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::uint64_t j = i + next_below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace groupenc
