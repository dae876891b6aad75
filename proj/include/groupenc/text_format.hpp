#pragma once

#include <charconv>
#include <cstdio>
#include <string>

#include "groupenc/errors.hpp"

namespace groupenc {

/// Shortest decimal form that round-trips the exact double. Used by every
/// text writer so outputs are byte-stable across runs.
inline std::string format_double(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw FormatError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw FormatError("not a non-negative integer: '" + std::string(text) + "'");
    }
    return value;
}

} // namespace groupenc
