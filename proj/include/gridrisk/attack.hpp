#pragma once

#include <cstdint>
#include <vector>

#include "gridrisk/attack_vector.hpp"
#include "gridrisk/common.hpp"
#include "gridrisk/network_model.hpp"

namespace gridrisk {

/// Attacker's view of the grid: exact topology and placement, line weights
/// off by a bounded multiplicative error.
struct PerturbedModel {
  Matrix H;
  Vector weights;  // diagonal of W̃
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// W̃(l) = W(l)·(1 + u_l), u_l ~ U[−fraction, fraction], H̃ rebuilt from W̃.
PerturbedModel perturb_model(const GridModel& model, double fraction, std::uint64_t seed);

/// a = (I − diag d)·H·c. The masked model must stay observable.
/// target only labels the attack; mu is read back as a(target).
AttackVector build_full_knowledge_attack(const Matrix& H, const Vector& c, const AvailabilityMask& d,
                                         std::size_t target = 0);

/// Same construction on the attacker's H̃.
AttackVector build_limited_knowledge_attack(const PerturbedModel& perturbed, const Vector& c,
                                            const AvailabilityMask& d, std::size_t target = 0);

/// a scaled by mu_new / mu; d and support unchanged.
AttackVector scale_attack(const AttackVector& attack, double mu_new);

/// Splits a critical tuple into integrity and availability rows: the target
/// plus the first k_a − 1 other tuple rows (ascending) are attacked, the rest
/// removed. k_a = |tuple| is the pure FDI variant.
AvailabilityMask tuple_availability(const std::vector<std::size_t>& tuple, std::size_t target, std::size_t k_a,
                                    std::size_t measurement_count);

/// Attack on `tuple` built entirely from H_attacker: certificate c with
/// H_attacker(target,:)c = mu and zero outside the tuple, then a = H_attacker,d c.
AttackVector tuple_attack(const Matrix& H_attacker, const std::vector<std::size_t>& tuple, std::size_t target,
                          std::size_t k_a, double mu);

}  // namespace gridrisk
