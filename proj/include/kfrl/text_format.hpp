#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace kfrl {

// All JSON emitted by this project goes through these helpers so that a
// given run always produces byte-identical output. %g never emits locale
// separators and snprintf ignores the global C++ locale.

inline std::string fmt_double(double value, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
    return std::string(buf);
}

// 9 significant digits: the precision used in report-style JSON.
inline std::string fmt_g9(double value) { return fmt_double(value, 9); }

// 17 significant digits: enough for exact double round-trips (snapshots).
inline std::string fmt_g17(double value) { return fmt_double(value, 17); }

inline void append_double_array(std::string& out, std::span<const double> values,
                                int significant_digits) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += fmt_double(values[i], significant_digits);
    }
    out += ']';
}

inline void append_index_array(std::string& out, const std::vector<std::size_t>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(values[i]);
    }
    out += ']';
}

}  // namespace kfrl
