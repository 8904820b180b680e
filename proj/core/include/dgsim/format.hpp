#pragma once

#include <charconv>
#include <string>

namespace dgsim {

// Shortest round-trip decimal form of a double. All simulator output files
// funnel through this so repeated runs with the same seeds are
// byte-identical.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace dgsim
