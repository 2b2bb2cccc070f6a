#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridrisk/attack_vector.hpp"
#include "gridrisk/common.hpp"
#include "gridrisk/estimator.hpp"
#include "gridrisk/network_model.hpp"

namespace gridrisk {

struct ImpactAnalysis {
  std::vector<std::size_t> injection_rows;
  Matrix H_inj;
  Vector bias;  // expected load-estimate error H_inj·K_d·a
  double impact = 0.0;
};

/// impact = ‖H_inj K_d a‖₂ with H_inj the injection rows of the true H.
ImpactAnalysis impact_metric(const GridModel& model, const AttackVector& attack, const EstimatorGains& gains);

struct MonteCarloReport {
  std::size_t runs = 0;
  std::size_t alarms = 0;
  double empirical_delta = 0.0;
  double ci_low = 0.0;  // Wilson 95% interval
  double ci_high = 0.0;
  std::uint64_t seed = 0;
};

/// Seed for task `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Each run draws fresh measurement noise, adds the attack, drops the rows in
/// attack.d, re-estimates and applies the J-test with the threshold for the
/// reduced degrees of freedom. The residual does not depend on the state, so
/// runs use a flat profile.
MonteCarloReport empirical_detection(const GridModel& model, const AttackVector& attack, double alpha,
                                     std::size_t runs, std::uint64_t seed);

struct RiskPoint {
  double mu = 0.0;
  std::size_t k_a = 0;
  std::size_t k_d = 0;
  double lambda = 0.0;
  double delta = 0.0;
  double delta_empirical = -1.0;  // negative when not sampled
  double impact = 0.0;
  double risk = 0.0;  // (1 − delta)·impact
};

struct NamedAttack {
  std::string id;
  AttackVector attack;
};

struct RiskCurve {
  std::string id;
  std::size_t k_a = 0;
  std::size_t k_d = 0;
  std::vector<RiskPoint> points;
};

struct RiskConfig {
  double alpha = 0.05;
  double cost_integrity = 1.0;
  double cost_availability = 1.0;
  std::size_t empirical_runs = 0;  // 0: theory only
  std::uint64_t seed = 0;
};

/// μ_k = mu_max·k/points, k = 1..points.
std::vector<double> default_mu_grid(double mu_max = 0.5, std::size_t points = 200);

/// Risk curves for attacks that share one critical tuple and one cost
/// C_I·k_a + C_A·k_d; anything else is rejected with InputError.
std::vector<RiskCurve> risk_sweep(const GridModel& model, const std::vector<NamedAttack>& attacks,
                                  const std::vector<double>& mu_grid, const RiskConfig& config);

struct RiskRank {
  std::string id;
  std::size_t k_a = 0;
  std::size_t k_d = 0;
  double peak_risk = 0.0;
  double peak_mu = 0.0;
  double risk_at_mu = 0.0;  // at the grid point nearest to the requested μ
  std::size_t rank = 0;     // 1-based; equal keys share a rank
};

/// Orders by peak risk (descending), ties by fewer integrity attacks.
std::vector<RiskRank> compare_attacks(const std::vector<RiskCurve>& curves, double fixed_mu = 0.25);

/// CSV: attack_id,mu,k_a,k_d,lambda,delta_theory,delta_empirical,impact,risk.
std::string risk_points_csv(const std::vector<RiskCurve>& curves);

}  // namespace gridrisk
