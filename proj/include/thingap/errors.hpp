#pragma once

#include <stdexcept>
#include <string>

namespace thingap {

/// A point or parameter lies outside the set where an operation is defined.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Bad configuration or an inconsistent experiment plan.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EllipticityViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear solve did not reach the requested relative residual.
struct SolveFailure : std::runtime_error {
  SolveFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual(residual) {}
  double residual;
};

}  // namespace thingap
