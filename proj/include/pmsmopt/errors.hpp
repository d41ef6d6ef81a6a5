#pragma once

#include <stdexcept>
#include <string>

namespace pmsmopt {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// lhs_feasible could not find enough geometry-feasible designs.
class FeasibilityExhausted : public Error {
 public:
  using Error::Error;
};

/// Flux interpolation queried outside i_d <= 0, i_q >= 0, |i| <= I_max.
class OutOfQuadrant : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated model/data file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Artifact produced under a different design spec / KPI definition.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EvaluatorFailure : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmsmopt
