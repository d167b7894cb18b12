#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace bwmarket {

// Shortest round-trip decimal form, locale-independent. Used for all CSV
// output so reruns of one manifest are byte-identical.
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace bwmarket
