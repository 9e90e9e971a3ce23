#pragma once

#include <stdexcept>
#include <string>

namespace hdspa {

/// Bad input shape or value (dimension mismatch, non-finite query, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The complex cgf hit a zero of the mgf or the principal-branch cut.
class BranchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Hessian lost positive definiteness; the iterate left the model domain.
class ModelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition does not hold (e.g. model not standardized).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The phase/modulus conditions on the local ball failed during quadrature.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hdspa
