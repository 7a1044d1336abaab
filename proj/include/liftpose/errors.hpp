#pragma once

#include <stdexcept>
#include <string>

namespace liftpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is invalid or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Skeleton schema is malformed or a joint/segment is unknown.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A pose cannot be normalized (e.g. all coordinates are zero).
class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// An API contract was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Rigid alignment is undefined for the given point sets.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read, written, or parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace liftpose
