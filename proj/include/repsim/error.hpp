#pragma once

#include <stdexcept>
#include <string>

namespace repsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: unreadable files, bad formats, violated preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation could not produce a meaningful value (degenerate data,
/// undefined correlation, non-PSD Gram matrix, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace repsim
