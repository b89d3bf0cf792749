#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "maxcap/types.hpp"

namespace maxcap::detail {

/// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view token, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw ParseError(where + ": expected a number, got '" + std::string(token) + "'");
  return v;
}

inline long long parse_int(std::string_view token, const std::string& where) {
  long long v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw ParseError(where + ": expected an integer, got '" + std::string(token) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view token, const std::string& where) {
  std::uint64_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw ParseError(where + ": expected an unsigned integer, got '" + std::string(token) + "'");
  return v;
}

}  // namespace maxcap::detail
