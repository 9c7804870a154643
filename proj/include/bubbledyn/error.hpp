#pragma once

#include <stdexcept>
#include <string>

namespace bubbledyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A shape parameter that cannot describe a bubble (r <= 0, singular or
/// non-symmetric S).
class DegenerateShapeError : public Error {
public:
  using Error::Error;
};

/// Argument outside the domain of a physical law (e.g. density <= 0).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Collocation system could not be solved.
class IllPosedProblemError : public Error {
public:
  IllPosedProblemError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

private:
  double condition_estimate_;
};

/// Boundary data or velocity violating the cavity volume constraint, or a
/// cavity configuration whose flux covector vanishes.
class ConstraintError : public Error {
public:
  using Error::Error;
};

/// Discrete added-mass matrix that is not positive definite.
class DiscretizationError : public Error {
public:
  DiscretizationError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

private:
  double min_eigenvalue_;
};

/// Configuration left the admissible set (overlap or wall contact).
class CollisionError : public Error {
public:
  using Error::Error;
};

/// Scenario parse or validation failure.
class ValidationError : public Error {
public:
  using Error::Error;
};

}  // namespace bubbledyn
