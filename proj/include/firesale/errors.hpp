#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace firesale {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the domain of a price-impact law or model function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Model parameters that violate a standing modelling assumption.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A required precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
  static std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", r);
    return buf;
  }

 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) + ", residual=" + format_residual(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// A monotone iteration produced a non-monotone iterate.
class StrategyContractError : public Error {
 public:
  using Error::Error;
};

/// (I - W) is numerically singular.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference perturbation moved some bank across a class boundary.
class KinkError : public Error {
 public:
  explicit KinkError(const std::string& what, std::vector<std::size_t> banks = {})
      : Error(what), banks_(std::move(banks)) {}
  const std::vector<std::size_t>& banks() const { return banks_; }

 private:
  std::vector<std::size_t> banks_;
};

/// Scenario validation failure, carrying the offending field path.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace firesale
