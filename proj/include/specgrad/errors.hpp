#pragma once

#include <stdexcept>
#include <string>

namespace specgrad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong shapes, non-finite entries, out-of-range counts.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Mathematically undefined request (negative eigenvalue under a fractional
/// power, non-positive trace, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed or produced non-finite values.
class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Power iteration hit a vector in the null space of the operator.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Rational function evaluated at (or numerically at) a pole.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double x) : Error(what), x_(x) {}

  double x() const noexcept { return x_; }

 private:
  double x_;
};

}  // namespace specgrad
