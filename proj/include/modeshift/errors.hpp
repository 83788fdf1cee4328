#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace modeshift {

// Thrown when an operation that requires a smooth point is called at a point
// with a data point exactly on the bandwidth sphere.
class NonSmoothPointError : public std::invalid_argument {
 public:
  NonSmoothPointError(std::size_t boundary_index, const std::string& what)
      : std::invalid_argument(what), boundary_index(boundary_index) {}
  std::size_t boundary_index;
};

// Iteration cap reached. Finite termination is guaranteed, so hitting the cap
// indicates a tolerance misconfiguration rather than expected behavior.
class CapExceededError : public std::runtime_error {
 public:
  CapExceededError(std::size_t seed_index, const std::string& what)
      : std::runtime_error(what), seed_index(seed_index) {}
  std::size_t seed_index;
};

// A deflation round found a mode whose inlier ball contains no unclaimed
// point; components overlap or sigma/bandwidth is wrong for the data.
class DeflationStallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace modeshift
