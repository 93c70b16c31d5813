#pragma once

#include <stdexcept>
#include <string>

namespace netfolio {

/// Base class for every error raised by the library. Messages always name
/// the offending input (file/line, ticker, cell, parameter).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical routine failed to converge or hit a degenerate case.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace netfolio
