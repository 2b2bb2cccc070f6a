#pragma once

#include <cstddef>
#include <string>

#include "gridrisk/common.hpp"

namespace gridrisk {

/// Paired integrity vector a and availability vector d.
///
/// Invariant: a(i) = 0 wherever d(i) = 1. Indices are 0-based.
struct AttackVector {
  Vector a;
  AvailabilityMask d;
  std::size_t target = 0;
  double mu = 0.0;

  std::size_t measurement_count() const { return static_cast<std::size_t>(a.size()); }
  std::size_t integrity_count() const;     // k_a = ‖a‖₀
  std::size_t availability_count() const;  // k_d = ‖d‖₀
};

/// Sparse document form {target, mu, a: {"i": value}, d: [i, ...]} with
/// 1-based measurement indices.
std::string attack_to_json(const AttackVector& attack);
AttackVector attack_from_json(const std::string& document, std::size_t measurement_count);

}  // namespace gridrisk
