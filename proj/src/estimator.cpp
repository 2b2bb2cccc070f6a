#include "gridrisk/estimator.hpp"

#include <string>

namespace gridrisk {

namespace {

constexpr double kPivotRatio = 1e-10;

Eigen::LDLT<Matrix> factor_normal(const Matrix& H, const Vector& sigma, const char* what) {
  const Vector w = sigma.array().square().inverse().matrix();
  const Matrix G = H.transpose() * w.asDiagonal() * H;
  Eigen::LDLT<Matrix> ldlt(G);
  const Vector pivots = ldlt.vectorD().cwiseAbs();
  const double largest = pivots.size() ? pivots.maxCoeff() : 0.0;
  if (ldlt.info() != Eigen::Success || !(largest > 0.0) ||
      pivots.minCoeff() < kPivotRatio * largest)
    throw UnobservableError(what);
  return ldlt;
}

void check_sigma(const Matrix& H, const Vector& sigma) {
  if (sigma.size() != H.rows())
    throw DimensionError("sigma has length " + std::to_string(sigma.size()) + ", expected " +
                         std::to_string(H.rows()));
  if ((sigma.array() <= 0.0).any()) throw InputError("measurement sigmas must be positive");
}

Vector masked(const Vector& z, const AvailabilityMask& d) {
  Vector out = z;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i]) out(static_cast<Eigen::Index>(i)) = 0.0;
  return out;
}

}  // namespace

Vector solve_wls(const Matrix& H, const Vector& sigma, const Vector& z) {
  check_sigma(H, sigma);
  if (z.size() != H.rows()) throw DimensionError("measurement vector length does not match H");
  const auto ldlt = factor_normal(H, sigma, "singular normal matrix: model is unobservable");
  const Vector w = sigma.array().square().inverse().matrix();
  return ldlt.solve(H.transpose() * w.cwiseProduct(z));
}

Vector solve_wls(const GridModel& model, const Vector& z) {
  return solve_wls(model.H(), model.sigma(), z);
}

EstimatorGains compute_reduced_gains(const Matrix& H, const Vector& sigma, const AvailabilityMask& d) {
  check_sigma(H, sigma);
  EstimatorGains g;
  g.removed = d;
  g.model = mask_rows(H, d);
  g.sigma = sigma;
  const auto ldlt = factor_normal(g.model, sigma, d.empty() || count_removed(d) == 0
                                                      ? "singular normal matrix: model is unobservable"
                                                      : "unobservable under availability attack");
  const Vector w = sigma.array().square().inverse().matrix();
  g.K = ldlt.solve(g.model.transpose() * w.asDiagonal());
  g.T = g.model * g.K;
  const auto m = H.rows();
  g.S = Matrix::Identity(m, m) - g.T;
  g.dof = static_cast<int>(m) - static_cast<int>(H.cols()) - static_cast<int>(count_removed(d));
  return g;
}

EstimatorGains compute_reduced_gains(const GridModel& model, const AvailabilityMask& d) {
  return compute_reduced_gains(model.H(), model.sigma(), d);
}

EstimatorGains compute_gains(const Matrix& H, const Vector& sigma) {
  return compute_reduced_gains(H, sigma, no_removal(static_cast<std::size_t>(H.rows())));
}

EstimatorGains compute_gains(const GridModel& model) { return compute_gains(model.H(), model.sigma()); }

Vector residual(const EstimatorGains& gains, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != gains.measurement_count())
    throw DimensionError("residual: measurement vector has length " + std::to_string(z.size()) +
                         ", expected " + std::to_string(gains.measurement_count()));
  return gains.S * masked(z, gains.removed);
}

Vector estimate(const EstimatorGains& gains, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != gains.measurement_count())
    throw DimensionError("estimate: measurement vector length mismatch");
  return gains.K * masked(z, gains.removed);
}

}  // namespace gridrisk
