#pragma once

#include <stdexcept>
#include <string>

namespace eccnn {

// Base of every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that cannot be combined by the requested op.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input that is well-formed but violates a documented precondition
// (bad labels, inconsistent configs, out-of-range values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem and codec failures.
class IoError : public Error {
 public:
  using Error::Error;
};

class FileNotFoundError : public IoError {
 public:
  using IoError::IoError;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

// Command-line misuse: missing or contradictory arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace eccnn
