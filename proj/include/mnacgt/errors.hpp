#pragma once

#include <stdexcept>
#include <string>

namespace mnacgt {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Argument outside the range where an approximation or inequality holds.
struct ValidityError : DomainError {
  using DomainError::DomainError;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizationFailure : NumericalFailure {
  using NumericalFailure::NumericalFailure;
};

}  // namespace mnacgt
