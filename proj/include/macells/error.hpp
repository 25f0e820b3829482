#pragma once

#include <stdexcept>
#include <string>

namespace macells {

// Malformed or invalid input: bad CSV cell, unknown identifier, dimension
// mismatch, out-of-range parameter. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input for which no result exists: all-zero incidence
// matrix, unreachable target, disconnected topology, more clusters than
// points. Maps to CLI exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace macells
