#pragma once

#include <stdexcept>
#include <string>

namespace cpisnet {

// Raised for malformed or inconsistent input data (CLI exit code 1).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a caller violates an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace cpisnet
