#pragma once

#include <stdexcept>
#include <string>

namespace ivcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the operation's domain (negative radius,
/// divisor interval containing zero, label out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or stream.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Certified training produced non-finite values or exceeded the loss ceiling.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ivcert
