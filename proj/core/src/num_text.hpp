#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace msh::detail {

// Shortest decimal form that parses back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace msh::detail
