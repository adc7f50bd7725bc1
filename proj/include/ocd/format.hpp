#pragma once

#include <cstdio>
#include <string>

namespace ocd {

// 6 significant digits, fixed across the code base so report files diff
// reproducibly.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace ocd
