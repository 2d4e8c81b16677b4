#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlscale {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input problems: malformed files, invalid manifests, bad arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, std::string column, const std::string& what)
      : InputError("line " + std::to_string(line) +
                   (column.empty() ? std::string() : ", column " + column) + ": " + what),
        line_(line),
        column_(std::move(column)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

class DuplicateError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyInputError : public InputError {
 public:
  using InputError::InputError;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class ArgumentError : public InputError {
 public:
  using InputError::InputError;
};

// A caller broke a documented precondition on otherwise well-formed data
// (e.g. asking for first crossings on a non-monotone curve).
class ContractError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical failures: infeasible budgets, failed fits, empty bootstraps.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public NumericalError {
 public:
  InfeasibleError(const std::string& what, double bound)
      : NumericalError(what), bound_(bound) {}

  /// The binding limit (e.g. the minimal achievable compute).
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

class OptimizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnusableCurveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rlscale
