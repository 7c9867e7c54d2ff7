#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anchorpose {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad sizes, out-of-range
/// parameters, a matrix that is not a rotation, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Input data cannot support the requested computation (all lines parallel,
/// a point sitting on the center, ...).
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace anchorpose
