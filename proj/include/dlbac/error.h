#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlbac {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (counts, ranges, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A rule cannot be satisfied under the configured value sets.
class SynthesisError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Unknown user, resource, operation or metadata name.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Shapes of vectors, matrices or datasets do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlbac
