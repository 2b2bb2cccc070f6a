#include "gridrisk/detector.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace gridrisk {

namespace {

constexpr double kGammaEps = 1e-14;
constexpr int kGammaMaxIter = 100000;

double gamma_prefactor(double a, double x) { return std::exp(-x + a * std::log(x) - std::lgamma(a)); }

// P(a, x) by the power series; valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kGammaMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEps) break;
  }
  return sum * gamma_prefactor(a, x);
}

// Q(a, x) by the Lentz continued fraction; valid for x ≥ a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEps) break;
  }
  return gamma_prefactor(a, x) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InputError("incomplete gamma: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw InputError("incomplete gamma: shape must be positive");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double central_chi2_cdf(double x, int dof) {
  if (dof < 1) throw InputError("chi-squared: degrees of freedom must be positive");
  if (std::isnan(x)) throw InputError("chi-squared: NaN argument");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_threshold(double alpha, int dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("threshold: alpha must lie in (0, 1)");
  if (dof < 1) throw InputError("threshold: degrees of freedom must be positive");
  const double target = 1.0 - alpha;
  auto f = [&](double t) { return central_chi2_cdf(t, dof) - target; };

  double hi = 2.0 * dof + 10.0;
  for (int i = 0; f(hi) < 0.0; ++i) {
    if (i > 200) throw SolverError("threshold: could not bracket root, upper bound " + std::to_string(hi));
    hi *= 2.0;
  }
  double lo = 0.0;
  if (f(lo) >= 0.0) return 0.0;

  std::uintmax_t iterations = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  if (iterations >= 200)
    throw SolverError("threshold: root-finding did not converge in bracket [" + std::to_string(a) + ", " +
                      std::to_string(b) + "]");
  const double fa = std::abs(f(a));
  const double fb = std::abs(f(b));
  return fa <= fb ? a : b;
}

double noncentral_chi2_cdf(double x, int dof, double lambda, double tail_tolerance) {
  if (dof < 1) throw InputError("non-central chi-squared: degrees of freedom must be positive");
  if (!(lambda >= 0.0)) throw InputError("non-central chi-squared: lambda must be non-negative");
  if (x <= 0.0) return 0.0;
  if (lambda == 0.0) return central_chi2_cdf(x, dof);

  const double h = 0.5 * lambda;
  const double y = 0.5 * x;
  const double a0 = 0.5 * dof;
  const double side_tol = 0.5 * tail_tolerance;
  const auto mode = static_cast<std::int64_t>(std::floor(h));
  const double log_w_mode = -h + mode * std::log(h) - std::lgamma(static_cast<double>(mode) + 1.0);

  double sum = 0.0;

  // Upward from the mode: tail beyond i is at most w_i·q/(1−q), q = h/(i+1).
  double log_w = log_w_mode;
  for (std::int64_t i = mode;; ++i) {
    const double w = std::exp(log_w);
    sum += w * regularized_gamma_p(a0 + static_cast<double>(i), y);
    const double q = h / static_cast<double>(i + 1);
    if (q < 1.0 && w * q / (1.0 - q) < side_tol) break;
    log_w += std::log(h) - std::log(static_cast<double>(i + 1));
  }

  // Downward: mass below i is at most w_i·q/(1−q), q = i/h.
  log_w = log_w_mode;
  for (std::int64_t i = mode - 1; i >= 0; --i) {
    log_w += std::log(static_cast<double>(i + 1)) - std::log(h);
    const double w = std::exp(log_w);
    sum += w * regularized_gamma_p(a0 + static_cast<double>(i), y);
    const double q = static_cast<double>(i) / h;
    if (w * q / (1.0 - q) < side_tol) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

BddConfig make_bdd_config(double alpha, int dof) { return {alpha, dof, chi2_threshold(alpha, dof)}; }

JTestResult j_test(const Vector& r, const Vector& sigma, const BddConfig& config,
                   const AvailabilityMask& removed) {
  if (r.size() != sigma.size()) throw DimensionError("j_test: residual and sigma lengths differ");
  if (!removed.empty() && removed.size() != static_cast<std::size_t>(r.size()))
    throw DimensionError("j_test: availability vector length mismatch");
  JTestResult out;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!removed.empty() && removed[static_cast<std::size_t>(i)]) continue;
    const double s = r(i) / sigma(i);
    out.statistic += s * s;
  }
  out.verdict = out.statistic > config.tau ? Verdict::Bad : Verdict::Good;
  return out;
}

double noncentrality(const Vector& a, const EstimatorGains& gains) {
  if (static_cast<std::size_t>(a.size()) != gains.measurement_count())
    throw DimensionError("noncentrality: attack length mismatch");
  const Vector shifted = gains.S * a;
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < shifted.size(); ++i) {
    if (gains.removed[static_cast<std::size_t>(i)]) continue;
    const double s = shifted(i) / gains.sigma(i);
    lambda += s * s;
  }
  return lambda;
}

DetectionAnalysis detection_probability(const AttackVector& attack, const EstimatorGains& gains,
                                        double alpha) {
  const AvailabilityMask& d = attack.d.empty() ? gains.removed : attack.d;
  if (d != gains.removed)
    throw InputError("detection_probability: gains were computed for a different availability vector");
  if (gains.dof < 1) throw UnobservableError("detection_probability: no residual degrees of freedom left");
  DetectionAnalysis out;
  out.lambda = noncentrality(attack.a, gains);
  out.dof = gains.dof;
  out.tau = chi2_threshold(alpha, gains.dof);
  out.delta = 1.0 - noncentral_chi2_cdf(out.tau, out.dof, out.lambda);
  return out;
}

}  // namespace gridrisk
