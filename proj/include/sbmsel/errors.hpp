#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbmsel {

// Thrown when an argument or an input object violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed edge-list text. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A t statistic was requested for a sample with zero variance.
class DegenerateVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace sbmsel
