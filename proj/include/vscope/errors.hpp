#pragma once

#include <stdexcept>
#include <string>

namespace vscope {

/// Bad input: malformed configuration, out-of-range parameters, mismatched grids.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The computation itself went wrong (NaN, CFL violation).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Snapshot or mask file could not be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vscope
