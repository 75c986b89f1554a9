#pragma once

#include <stdexcept>
#include <string>

namespace pulsecal {

// Raised for inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for file system and parsing failures in the harness layer.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidInput(message);
  }
}

}  // namespace pulsecal
