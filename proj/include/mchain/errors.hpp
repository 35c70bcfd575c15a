#pragma once

#include <stdexcept>
#include <string>

namespace mchain {

/// Operand shapes do not conform for the requested operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced (or was handed) a NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Misuse of the gradient tape: unknown node, duplicate hook, non-scalar root.
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mchain
