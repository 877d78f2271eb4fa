#pragma once

#include <stdexcept>
#include <string>

namespace valdet {

/// Base class for every error raised by the library. Messages are meant to be
/// shown to the user as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record (carries a line number when known).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A precondition on arguments did not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-finite values, degenerate fits).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace valdet
