#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochadd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A 64-bit integer computation would have wrapped.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed sequence or command-line specification. `position()` is the
/// byte offset into the offending string.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        reason_(what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  std::size_t position_;
};

}  // namespace stochadd
