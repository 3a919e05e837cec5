#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>

#include "waxman/errors.hpp"

namespace waxman {

// Shortest decimal rendering that round-trips the exact double value.
// Used by the model file format, which must survive save/load bit-exactly.
inline std::string fmt_shortest(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

// Fixed 17-significant-digit rendering for CSV/plot output.
inline std::string fmt_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

inline double parse_double(std::string_view token) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw UsageError("not a real number: '" + std::string(token) + "'");
    }
    return value;
}

inline long long parse_int(std::string_view token) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw UsageError("not an integer: '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace waxman
