#pragma once

#include <stdexcept>
#include <string>

namespace nsp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input detected before any computation: the CLI maps it to exit code 1.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A pointwise evaluation produced NaN or Inf.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// The continuity step produced a non-positive density somewhere on the grid.
class PositivityLoss : public Error {
 public:
  PositivityLoss(const std::string& what, std::size_t point, double value)
      : Error(what), point_(point), value_(value) {}
  std::size_t point() const { return point_; }
  double value() const { return value_; }

 private:
  std::size_t point_;
  double value_;
};

/// Cholesky of the mass operator failed.
class NonPositiveDensity : public Error {
 public:
  using Error::Error;
};

/// The per-step fixed-point iteration did not converge.
class NoContraction : public Error {
 public:
  NoContraction(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace nsp
