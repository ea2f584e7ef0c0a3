#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "rwu/errors.hpp"

namespace rwu {

// Shortest decimal string that reads back to the same double. Non-finite
// values abort the output with `context` in the message.
inline std::string fmt_num(double v, const char* context = "value") {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + context);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw NumericError(std::string("cannot format ") + context);
  return {buf, res.ptr};
}

}  // namespace rwu
