#pragma once

#include <stdexcept>
#include <string>

namespace levydetect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: negative volatility, nonpositive intensity, bad grid step.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration that cannot be parsed or has wrong field types.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The two specifications cannot be compared with a closed-form density ratio.
class UnsupportedPairError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. phi outside the support).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on inputs that violate its precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A coarse grid step is not an integer multiple of the simulation step.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Requested false-alarm budget is below one monitoring step.
class InfeasibleTargetError : public Error {
 public:
  using Error::Error;
};

/// Change-point estimate requested for a censored run.
class UndefinedEstimateError : public Error {
 public:
  using Error::Error;
};

/// Lower-bound ratio with a nonpositive denominator.
class DegenerateRuleError : public Error {
 public:
  using Error::Error;
};

}  // namespace levydetect
