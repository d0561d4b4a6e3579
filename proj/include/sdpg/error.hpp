#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sdpg {

enum class ErrorKind {
  usage,          // bad arguments, invalid ids, calling out of order
  domain,         // probe outside a table grid or an input outside its domain
  numerical,      // non-finite values, shape mismatches in numeric code
  non_convergence // iterative solver ran out of iterations
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Raised when a smoothed expectation probes a point where f is not finite.
class EvaluationError : public NumericalError {
 public:
  EvaluationError(const std::string& what, std::vector<double> point)
      : NumericalError(what), point_(std::move(point)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(ErrorKind::non_convergence, what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace sdpg
