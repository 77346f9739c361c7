#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace condcov {

/// Shortest decimal that round-trips the double exactly. Locale-free and
/// deterministic, so exports built from it are byte-stable.
inline std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

/// Fixed 17-significant-digit form used by delimited exports; also exact.
inline std::string format_double_17g(double value) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace condcov
