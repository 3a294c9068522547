#pragma once

#include <stdexcept>
#include <string>

namespace rffr {

/// Base for every error raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments violate an operation's preconditions (shape, range, geometry).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A FAKE sample reached a trainer that must only see REAL samples.
class RealOnlyViolation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// NaN or infinity in an activation, loss or parameter.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// Metric requested on data for which it is not defined (e.g. one-class AUC).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file or checkpoint required by a command does not exist.
class MissingPrerequisite : public Error {
 public:
  using Error::Error;
};

/// Filesystem or decode failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rffr
