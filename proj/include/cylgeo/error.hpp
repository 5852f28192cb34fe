#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cylgeo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point or vector violates a manifold constraint (unit norm, tangency, Stiefel).
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Requested an s-derivative of a profile that has no analytic derivative.
class UnsupportedDerivative : public Error {
 public:
  using Error::Error;
};

// A linear system that should be nonsingular is not (e.g. degenerate critical manifold).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Input required to be a critical point is not one.
class NotCritical : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_residual,
                  std::vector<double> trace = {})
      : Error(what), last_residual_(last_residual), trace_(std::move(trace)) {}

  double last_residual() const { return last_residual_; }
  const std::vector<double>& trace() const { return trace_; }

 private:
  double last_residual_;
  std::vector<double> trace_;
};

}  // namespace cylgeo
