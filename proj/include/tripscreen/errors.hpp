#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tripscreen {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input rejected: non-finite entries, asymmetric matrices, bad datasets.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range scalar parameter (lambda <= 0, eps < 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Dual vector outside the box [0, 1].
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Iterative eigensolver ran out of budget. The best iterate is kept so callers
// can decide whether it is good enough.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_value, Eigen::VectorXd best_vector,
                   double residual)
      : Error(what),
        best_value_(best_value),
        best_vector_(std::move(best_vector)),
        residual_(residual) {}

  double best_value() const noexcept { return best_value_; }
  const Eigen::VectorXd& best_vector() const noexcept { return best_vector_; }
  double residual() const noexcept { return residual_; }

 private:
  double best_value_;
  Eigen::VectorXd best_vector_;
  double residual_;
};

}  // namespace tripscreen
