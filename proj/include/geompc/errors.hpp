#pragma once

#include <stdexcept>
#include <string>

namespace geompc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A pivot column had no entry above the singularity threshold.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Updated chart coordinates left the domain of the local parametrization.
class ChartDomainViolation : public Error {
 public:
  using Error::Error;
};

/// Projection back onto the manifold did not reach tolerance.
class ProjectionDivergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geompc
