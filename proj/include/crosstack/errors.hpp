#pragma once

#include <stdexcept>
#include <string>

namespace crosstack {

// Read-enable assignment incompatible with the selected operating mode,
// or an operation attempted against the wrong bias (e.g. programming a
// read-enabled layer).
class ModeViolationError : public std::runtime_error {
 public:
  explicit ModeViolationError(const std::string& what) : std::runtime_error(what) {}
};

// Singular or ill-posed nodal system; the message names the floating node.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Read amplitude at or above the switching threshold would corrupt stored
// weights; raised instead of silently disturbing device state.
class ReadDisturbError : public std::runtime_error {
 public:
  explicit ReadDisturbError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crosstack
