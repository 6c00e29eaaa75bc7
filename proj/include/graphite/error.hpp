#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphite {

/// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document; `offset()` is the byte position the parser stopped at.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Input is well-formed but violates a precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Operation is not valid in the resource's current state.
class Conflict : public Error {
 public:
  Conflict(const std::string& what, std::string state) : Error(what), state_(std::move(state)) {}

  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

}  // namespace graphite
