#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace echoalign {

// Base for every error the toolkit raises on bad data or bad arguments.
// The CLI maps anything derived from this to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed feature/config file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Argument outside the operation's domain (zero-norm vector, rate >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Two inputs that should agree do not (id sets, dims, class counts).
class MismatchError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Selection accuracy over an empty Part 1 is undefined.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

// Training loss became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace echoalign
