#pragma once

#include <stdexcept>
#include <string>

namespace rwu {

// Base class of every error thrown by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-domain argument (stability index, tail constants, grids, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation requested for a walk whose regime does not support it.
class RegimeError : public Error {
 public:
  using Error::Error;
};

// Inconsistent data, e.g. a visited site without a scenery value.
class DataError : public Error {
 public:
  using Error::Error;
};

// Geometry outside the simulated domain, or off-grid corners.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Rectangle corners that do not sit on grid nodes.
class AlignmentError : public RangeError {
 public:
  using RangeError::RangeError;
};

// NaN or infinity reached an output.
class NumericError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace detail

}  // namespace rwu
