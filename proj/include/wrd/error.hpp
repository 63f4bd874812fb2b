#pragma once

#include <stdexcept>
#include <string>

namespace wrd {

// Base of every error the library raises. The CLI maps `UsageError`
// descendants to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

// numerics
class DimensionError : public UsageError {
 public:
  using UsageError::UsageError;
};
class RankError : public UsageError {
 public:
  using UsageError::UsageError;
};
class InvalidMaskError : public UsageError {
 public:
  using UsageError::UsageError;
};
class DomainError : public UsageError {
 public:
  using UsageError::UsageError;
};
class NumericError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

// data / model configuration
class InputError : public UsageError {
 public:
  using UsageError::UsageError;
};
class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};
class VocabularyError : public UsageError {
 public:
  using UsageError::UsageError;
};
class InstanceError : public UsageError {
 public:
  using UsageError::UsageError;
};
class DegenerateSentenceError : public InstanceError {
 public:
  using InstanceError::InstanceError;
};
class AlignmentError : public UsageError {
 public:
  using UsageError::UsageError;
};
class IoError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace wrd
