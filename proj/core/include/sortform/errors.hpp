#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sortform {

// Base class for every error the toolkit raises on bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (shape, range, finiteness).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Problem size exceeds what an exhaustive routine accepts.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. line() is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sortform
