#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detsparse {

/// Malformed edge-list input. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure to read or write a file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition or internal contract was violated.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input graph is disconnected where a connected graph is required.
class DisconnectedGraph : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

}  // namespace detsparse
