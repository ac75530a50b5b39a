#pragma once

#include <stdexcept>
#include <string>

namespace epitome {

/// Raised when two operands disagree on dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a region or index falls outside its parent plane.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a data structure violates one of its invariants
/// (unassigned block, misaligned mask, ...).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the least-squares solvers when a system stays singular.
/// Callers usually react by raising the regularization weight.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: unreadable files, bad CSV, invalid parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric could not be evaluated on otherwise valid input.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epitome
