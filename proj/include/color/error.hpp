#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace color {

// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a structural rule (undeclared endpoint,
// disconnected pattern, unknown vertex in an update, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The exact oracle gave up; the count it would have produced is unknown.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CountOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Summary file problems.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// An estimator guard tripped (enumeration cap, table size cap).
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Timeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace color
