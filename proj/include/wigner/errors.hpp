#pragma once

#include <stdexcept>
#include <string>

namespace wigner {

/// Invalid ensemble, experiment, or CLI configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (Im z <= 0, E outside the bulk, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure: eigensolver non-convergence, singular solve, stiff integrator, ...
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegratorStiffnessError : public NumericalError {
 public:
  IntegratorStiffnessError(const std::string& what, double min_gap)
      : NumericalError(what), min_gap_(min_gap) {}
  [[nodiscard]] double min_gap() const noexcept { return min_gap_; }

 private:
  double min_gap_;
};

class TuningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Explicit time step exceeds the stability limit of the scheme.
class StepSizeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace wigner
