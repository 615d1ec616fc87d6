#pragma once

#include <stdexcept>
#include <string>

namespace fracconv {

// Every failure the library reports is one of these. The CLI maps
// ConfigError to exit status 2; the rest are treated as run failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced by an operator or a nonlinearity.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Grid too coarse (in space or time) for the requested quantity.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Picard iteration hit its cap while the residual was still growing.
class NonContractionError : public Error {
 public:
  NonContractionError(const std::string& what, double measured_ratio, double bound)
      : Error(what), measured_ratio_(measured_ratio), bound_(bound) {}
  double measured_ratio() const { return measured_ratio_; }
  double bound() const { return bound_; }

 private:
  double measured_ratio_;
  double bound_;
};

// Inner fixed-point loop of the marching solver failed to settle.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracconv
