#pragma once

#include <stdexcept>
#include <string>

namespace dapmap {

/// Input data or configuration violates a documented precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation could not complete (sampler budget, enumeration budget,
/// equilibrium verification, iteration guard).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dapmap
