#pragma once

#include <cstdio>
#include <string>

namespace salab {

/// Locale-independent shortest round-trip decimal for CSV cells.
inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace salab
