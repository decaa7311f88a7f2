#pragma once
// Shortest round-trip decimal formatting for CSV output; byte-stable across
// runs and platforms with IEEE doubles.

#include <charconv>
#include <string>

namespace banditlab {

inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace banditlab
