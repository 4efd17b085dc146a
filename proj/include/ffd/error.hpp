#pragma once

#include <stdexcept>
#include <string>

namespace ffd {

// Problems with user-supplied data or arguments. The CLI maps these to exit
// status 1; anything else escaping a subcommand is an internal error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

// A sequence that cannot be turned into a usable signal (too few valid
// samples, too many gaps, too short).
class UnrecoverableSequence : public InputError {
 public:
  using InputError::InputError;
};

// Numerical degeneracy: singular systems, zero denominators.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ffd
