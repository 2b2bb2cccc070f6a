#include <doctest.h>

#include <random>

#include "gridrisk/estimator.hpp"
#include "gridrisk/network_model.hpp"
#include "support.hpp"

using namespace gridrisk;

namespace {

double max_abs(const Matrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 0.1) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = g(rng);
  return v;
}

}  // namespace

TEST_CASE("gain identities on every bundled case") {
  for (const char* name : {"chain3", "chain3_minimal", "ring4", "ieee14"}) {
    CAPTURE(name);
    const auto model = testing::load_model(name);
    const auto g = compute_gains(model);
    const auto n = static_cast<Eigen::Index>(model.state_dim());
    const auto m = static_cast<Eigen::Index>(model.measurement_count());
    CHECK(max_abs(g.S * model.H()) <= 1e-9);
    CHECK(max_abs(g.T * g.T - g.T) <= 1e-8);
    CHECK(max_abs(g.K * model.H() - Matrix::Identity(n, n)) <= 1e-9);
    CHECK(max_abs(g.T - model.H() * g.K) == 0.0);
    CHECK(max_abs(g.S - (Matrix::Identity(m, m) - g.T)) == 0.0);
    CHECK(g.dof == static_cast<int>(m - n));
    CHECK(numerical_rank(g.S) == static_cast<std::size_t>(m - n));
    // R⁻¹S is symmetric.
    const Matrix Rinv = model.sigma().array().square().inverse().matrix().asDiagonal();
    CHECK(max_abs(Rinv * g.S - g.S.transpose() * Rinv) <= 1e-8 * std::max(1.0, max_abs(Rinv)));
  }
}

TEST_CASE("14-bus degrees of freedom") {
  const auto model = testing::load_model("ieee14");
  CHECK(compute_gains(model).dof == 41);
  AvailabilityMask d = no_removal(54);
  d[0] = 1;  // one redundant flow row
  CHECK(compute_reduced_gains(model, d).dof == 40);
}

TEST_CASE("minimal plan has zero residual sensitivity") {
  const auto model = testing::load_model("chain3_minimal");
  REQUIRE(model.measurement_count() == model.state_dim());
  const auto g = compute_gains(model);
  CHECK(max_abs(g.S) <= 1e-12);
  CHECK(g.dof == 0);
}

TEST_CASE("solve_wls") {
  std::mt19937_64 rng(5);
  SUBCASE("zero-noise data is recovered") {
    const auto model = testing::load_model("ieee14");
    const Vector x = random_vector(13, rng);
    CHECK((solve_wls(model, model.H() * x) - x).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("adding Hc shifts the estimate by c") {
    const auto model = testing::load_model("ieee14");
    const auto snap = synthesize_measurements(model, random_vector(13, rng), 3);
    const Vector c = random_vector(13, rng);
    const Vector shift = solve_wls(model, snap.z + model.H() * c) - solve_wls(model, snap.z);
    CHECK((shift - c).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("matches an elimination oracle on the 3-bus chain") {
    const auto model = testing::load_model("chain3");
    Vector x(2);
    x << 0.05, -0.03;
    const auto snap = synthesize_measurements(model, x, 17);
    const auto z = std::vector<double>(snap.z.data(), snap.z.data() + snap.z.size());
    const auto sig = std::vector<double>(model.sigma().data(), model.sigma().data() + model.sigma().size());
    const auto oracle = testing::naive_wls(testing::to_dense(model.H()), sig, z);
    const Vector xhat = solve_wls(model, snap.z);
    for (int k = 0; k < 2; ++k) CHECK(xhat(k) == doctest::Approx(oracle[static_cast<std::size_t>(k)]).epsilon(1e-10));
  }
  SUBCASE("unobservable masked model") {
    const auto model = testing::load_model("chain3_minimal");
    AvailabilityMask d = no_removal(model.measurement_count());
    d[0] = 1;
    CHECK_THROWS_AS(compute_reduced_gains(model, d), UnobservableError);
  }
}

TEST_CASE("reduced gains") {
  const auto model = testing::load_model("ieee14");
  const auto m = static_cast<Eigen::Index>(model.measurement_count());
  std::mt19937_64 rng(21);

  SUBCASE("no removal equals the plain gains") {
    const auto g = compute_gains(model);
    const auto r = compute_reduced_gains(model, no_removal(54));
    CHECK(max_abs(g.S - r.S) == 0.0);
    CHECK(r.dof == g.dof);
  }

  SUBCASE("random observable masks keep every identity") {
    std::bernoulli_distribution drop(0.2);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
      AvailabilityMask d(54);
      for (auto& v : d) v = drop(rng) ? 1 : 0;
      if (!is_observable(model.H(), d)) {
        CHECK_THROWS_AS(compute_reduced_gains(model, d), UnobservableError);
        continue;
      }
      ++checked;
      const auto g = compute_reduced_gains(model, d);
      const auto kd = static_cast<Eigen::Index>(count_removed(d));
      CHECK(g.dof == 54 - 13 - kd);
      for (Eigen::Index i = 0; i < m; ++i)
        if (d[static_cast<std::size_t>(i)]) CHECK(g.model.row(i).cwiseAbs().maxCoeff() == 0.0);
      CHECK(max_abs(g.S * g.model) <= 1e-9);
      CHECK(max_abs(g.K * g.model - Matrix::Identity(13, 13)) <= 1e-9);
      // The residual applies S_d to masked data, so that is the operator to rank.
      const Matrix keep = mask_rows(Matrix::Identity(m, m), d);
      CHECK(numerical_rank(Matrix(g.S * keep)) == static_cast<std::size_t>(54 - 13 - kd));

      // Removed rows read as missing: residual is zero there, whatever z holds.
      const Vector z = random_vector(m, rng);
      const Vector r = residual(g, z);
      for (Eigen::Index i = 0; i < m; ++i)
        if (d[static_cast<std::size_t>(i)]) CHECK(r(i) == 0.0);

      // Stealth: adding H_d c leaves the residual unchanged.
      const Vector c = random_vector(13, rng);
      CHECK((residual(g, z + g.model * c) - r).cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK(checked > 10);
  }
}

TEST_CASE("residual") {
  const auto model = testing::load_model("chain3");
  const auto g = compute_gains(model);
  std::mt19937_64 rng(2);
  SUBCASE("noise-free data leaves no residual") {
    const Vector x = random_vector(2, rng);
    CHECK(residual(g, model.H() * x).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("matches (I − T)z with T built by the oracle") {
    // T = H (HᵀR⁻¹H)⁻¹ HᵀR⁻¹, columns by elimination.
    const auto H = testing::to_dense(model.H());
    const std::size_t m = H.size();
    std::vector<double> sig(m);
    for (std::size_t i = 0; i < m; ++i) sig[i] = model.sigma()(static_cast<Eigen::Index>(i));
    const Vector z = random_vector(static_cast<Eigen::Index>(m), rng);
    std::vector<double> zv(z.data(), z.data() + z.size());
    const auto xhat = testing::naive_wls(H, sig, zv);
    const Vector r = residual(g, z);
    for (std::size_t i = 0; i < m; ++i) {
      double fit = 0.0;
      for (std::size_t k = 0; k < xhat.size(); ++k) fit += H[i][k] * xhat[k];
      CHECK(r(static_cast<Eigen::Index>(i)) == doctest::Approx(zv[i] - fit).epsilon(1e-9).scale(1.0));
    }
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(residual(g, Vector::Zero(3)), DimensionError); }
}

TEST_CASE("estimate covariance approaches the inverse gain matrix") {
  const auto model = testing::load_model("ieee14");
  const Matrix& H = model.H();
  const Matrix Rinv = model.sigma().array().square().inverse().matrix().asDiagonal();
  const Matrix cov = (H.transpose() * Rinv * H).inverse();
  const auto g = compute_gains(model);
  std::mt19937_64 rng(8);
  const Vector x = random_vector(13, rng);
  Matrix acc = Matrix::Zero(13, 13);
  const int runs = 1000;
  for (int s = 0; s < runs; ++s) {
    const Vector e = estimate(g, synthesize_measurements(model, x, static_cast<std::uint64_t>(1000 + s)).z) - x;
    acc += e * e.transpose();
  }
  acc /= runs;
  CHECK((acc - cov).norm() <= 0.15 * cov.norm());
}
