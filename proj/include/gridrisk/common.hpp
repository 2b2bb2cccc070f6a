#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Availability vector d: entry 1 marks a measurement made unavailable.
using AvailabilityMask = std::vector<std::uint8_t>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: case documents, CLI arguments, attack documents.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The (possibly masked) measurement model no longer determines the state.
class UnobservableError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

inline std::size_t count_removed(const AvailabilityMask& d) {
  std::size_t k = 0;
  for (auto v : d) k += (v != 0);
  return k;
}

inline AvailabilityMask no_removal(std::size_t m) { return AvailabilityMask(m, 0); }

}  // namespace gridrisk
