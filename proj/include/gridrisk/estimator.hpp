#pragma once

#include "gridrisk/common.hpp"
#include "gridrisk/network_model.hpp"

namespace gridrisk {

/// WLS gain, hat and residual-sensitivity matrices for a measurement model,
/// optionally reduced by an availability vector d.
///
/// Reduction masks rows instead of deleting them, so every matrix keeps the
/// full m-length indexing: model = (I − diag(d))H, K = (modelᵀR⁻¹model)⁻¹modelᵀR⁻¹,
/// T = model·K, S = I − T. With d = 0 these are the plain gains.
struct EstimatorGains {
  AvailabilityMask removed;
  Matrix model;  // H_d
  Vector sigma;
  Matrix K;      // n × m
  Matrix T;      // m × m
  Matrix S;      // m × m
  int dof = 0;   // m − n − k_d

  std::size_t measurement_count() const { return static_cast<std::size_t>(model.rows()); }
  std::size_t state_dim() const { return static_cast<std::size_t>(model.cols()); }
  std::size_t removed_count() const { return count_removed(removed); }
  bool reduced() const { return removed_count() > 0; }
};

/// x̂ = (HᵀR⁻¹H)⁻¹HᵀR⁻¹z via LDLT of the normal matrix. Throws
/// UnobservableError when the smallest pivot falls below 1e-10 of the largest.
Vector solve_wls(const Matrix& H, const Vector& sigma, const Vector& z);
Vector solve_wls(const GridModel& model, const Vector& z);

EstimatorGains compute_gains(const Matrix& H, const Vector& sigma);
EstimatorGains compute_gains(const GridModel& model);

/// Throws UnobservableError("unobservable under availability attack") when the
/// masked model loses rank.
EstimatorGains compute_reduced_gains(const Matrix& H, const Vector& sigma, const AvailabilityMask& d);
EstimatorGains compute_reduced_gains(const GridModel& model, const AvailabilityMask& d);

/// r = S_d z_d. Entries of z at removed rows are ignored (treated as missing),
/// so the residual is exactly zero there.
Vector residual(const EstimatorGains& gains, const Vector& z);

/// x̂ = K_d z_d with removed entries ignored.
Vector estimate(const EstimatorGains& gains, const Vector& z);

}  // namespace gridrisk
