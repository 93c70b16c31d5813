#pragma once

#include <cstdio>
#include <string>

namespace netfolio {

/// printf-style number formatting; used by every writer so outputs are
/// byte-stable across runs.
inline std::string format_number(double value, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, value);
  return buf;
}

inline std::string fixed2(double value) { return format_number(value, "%.2f"); }

}  // namespace netfolio
