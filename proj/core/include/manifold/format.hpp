#pragma once

#include <charconv>
#include <string>

namespace manifold {

/// Shortest decimal representation that round-trips to the same double;
/// keeps text outputs byte-reproducible.
inline std::string formatDouble(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace manifold
