#pragma once

#include <stdexcept>
#include <string>

namespace sbvflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateNormalError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class ConcavityViolationError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix argument left the cone of positive-definite matrices.
class OutsideConeError : public Error {
 public:
  using Error::Error;
};

class InfeasibleBoundError : public Error {
 public:
  using Error::Error;
};

class ConvexityError : public Error {
 public:
  using Error::Error;
};

class StencilError : public Error {
 public:
  using Error::Error;
};

/// Discrete Hessian lost positive definiteness during time stepping.
class ConvexityLossError : public Error {
 public:
  ConvexityLossError(const std::string& what, double x1, double x2, double eigenvalue)
      : Error(what), x1_(x1), x2_(x2), eigenvalue_(eigenvalue) {}

  double x1() const { return x1_; }
  double x2() const { return x2_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  double x1_;
  double x2_;
  double eigenvalue_;
};

class BoundaryProjectionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbvflow
