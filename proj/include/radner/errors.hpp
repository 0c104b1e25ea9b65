#pragma once

#include <stdexcept>
#include <string>

namespace radner {

// Input violates a precondition (shape, sign, schema, tree mismatch).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested tree exceeds the configured path budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical domain failure (nonpositive density, exp overflow).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Root finding or optimization failed beyond recovery.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace radner
