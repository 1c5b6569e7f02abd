#pragma once

#include <stdexcept>
#include <string>

namespace pw {

// Malformed files, bad arguments, shape mismatches. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mathematical precondition does not hold (frame violation, degenerate
// vector, isolated vertex, non-convergence, non-finite values). Exit code 3.
class MathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pw
