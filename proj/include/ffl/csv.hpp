#pragma once

#include <charconv>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace ffl::csv {

// Fixed-precision formatter. All persisted CSVs go through this so that
// identical runs produce byte-identical files ('.' decimal separator,
// no locale involvement).
inline std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return std::string(buf);
}

// Shortest representation that round-trips to the same double. Used where
// a value must survive a text round trip exactly (generated scripts).
inline std::string exact(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';  // LF only
}

}  // namespace ffl::csv
