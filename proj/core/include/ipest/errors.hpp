#pragma once

#include <stdexcept>
#include <string>

namespace ipest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (trust ball, parameter range).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A Gram matrix or orthonormalisation fell below the conditioning floor.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical diagnostic could not produce a value.
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

/// Log-log regression with too few or nonpositive points.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipest
