#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arbor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tree expression. `position` is the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// An enumeration guard (edge count, vertex count, arc count) was exceeded.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

/// Input violates an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace arbor
