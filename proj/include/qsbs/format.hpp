#pragma once

#include <cstdio>
#include <charconv>
#include <string>

namespace qsbs {

/// Fixed-precision text; identical bits always print identically.
inline std::string fmt_num(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// Round-trip exact text (17 significant digits).
inline std::string fmt_exact(double v) { return fmt_num(v, 17); }

/// Shortest text that parses back to the same double.
inline std::string fmt_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace qsbs
