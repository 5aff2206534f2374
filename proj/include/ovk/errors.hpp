#pragma once

#include <stdexcept>
#include <string>

namespace ovk {

/// Malformed arguments: shape mismatches, out-of-range hyperparameters,
/// duplicate sites, unparsable files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or eigensolve that could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request that is well-formed but not implemented for the given kernel family.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ovk
