#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace epicurve {

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

} // namespace epicurve
