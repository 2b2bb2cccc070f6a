#pragma once

#include "gridrisk/attack_vector.hpp"
#include "gridrisk/common.hpp"
#include "gridrisk/estimator.hpp"

namespace gridrisk {

/// Regularized lower incomplete gamma P(a, x). Series for x < a + 1,
/// Lentz continued fraction otherwise, both to 1e-14 relative.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// P(χ²_k ≤ x). Returns 0 for x ≤ 0.
double central_chi2_cdf(double x, int dof);

/// τ with central_chi2_cdf(τ, dof) = 1 − alpha, 0 < alpha < 1.
double chi2_threshold(double alpha, int dof);

/// P(χ²_k(λ) ≤ x) as a Poisson(λ/2) mixture of central CDFs, summed outward
/// from the Poisson mode until the remaining weight is below tail_tolerance.
double noncentral_chi2_cdf(double x, int dof, double lambda, double tail_tolerance = 1e-12);

struct BddConfig {
  double alpha = 0.05;
  int dof = 1;
  double tau = 0.0;
};

BddConfig make_bdd_config(double alpha, int dof);

enum class Verdict { Good, Bad };

struct JTestResult {
  Verdict verdict = Verdict::Good;
  double statistic = 0.0;
};

/// statistic = Σ r_i²/σ_i² over rows not removed by d; bad iff statistic > τ.
JTestResult j_test(const Vector& r, const Vector& sigma, const BddConfig& config,
                   const AvailabilityMask& removed = {});

struct DetectionAnalysis {
  double lambda = 0.0;
  int dof = 0;
  double tau = 0.0;
  double delta = 0.0;
};

/// λ = ‖R^{-1/2}S_d a‖², δ = 1 − F_{χ²_{dof}(λ)}(τ_d(α)); the threshold is
/// recomputed for the reduced degrees of freedom.
DetectionAnalysis detection_probability(const AttackVector& attack, const EstimatorGains& gains,
                                        double alpha);

/// ‖R^{-1/2}S_d a‖² alone.
double noncentrality(const Vector& a, const EstimatorGains& gains);

}  // namespace gridrisk
