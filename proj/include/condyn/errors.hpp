#pragma once

#include <stdexcept>
#include <string>

namespace condyn {

// Bad config key/value or malformed input file. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor operand shapes do not match an operation's contract.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN or Inf where a finite value is required. CLI maps this to exit code 1.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failure. CLI maps this to exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace condyn
