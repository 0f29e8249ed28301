#pragma once

#include <stdexcept>
#include <string>

namespace pelab {

// Bad input values or violated preconditions. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content: wrong shape, bad checksum, unparseable rows.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Filesystem failures. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pelab
