#pragma once

#include <cstdio>
#include <string>

namespace jsqd::detail {

// 17 significant digits, '.' separator regardless of locale.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace jsqd::detail
