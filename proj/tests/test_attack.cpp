#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridrisk/attack.hpp"
#include "gridrisk/detector.hpp"
#include "gridrisk/estimator.hpp"
#include "gridrisk/security_index.hpp"
#include "support.hpp"

using namespace gridrisk;

namespace {

const GridModel& ieee14() {
  static const GridModel model = testing::load_model("ieee14");
  return model;
}

// Critical tuple through measurement 9 (0-based 8), from the (1, 10) program.
const std::vector<std::size_t>& tuple9() {
  static const std::vector<std::size_t> t = [] {
    IndexQuery q;
    q.target = 8;
    q.cost_availability = 0.5;
    return cost_weighted_index(ieee14().H(), q).tuple();
  }();
  return t;
}

double lambda_against(const GridModel& model, const AttackVector& atk) {
  return detection_probability(atk, compute_reduced_gains(model, atk.d), 0.05).lambda;
}

}  // namespace

TEST_CASE("perturb_model") {
  const auto& model = ieee14();
  SUBCASE("zero fraction reproduces H") {
    const auto p = perturb_model(model, 0.0, 5);
    CHECK(p.H == model.H());
    CHECK(p.weights == model.line_weights());
  }
  SUBCASE("bounded, positive, seeded") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = perturb_model(model, 0.2, seed);
      const Vector ratio = p.weights.cwiseQuotient(model.line_weights());
      CHECK(((ratio.array() - 1.0).abs() <= 0.2).all());
      CHECK((p.weights.array() > 0.0).all());
      CHECK(p.H == model.assemble(p.weights));
      CHECK(p.seed == seed);
      // Same sparsity: topology and placement are known exactly.
      CHECK(((p.H.array() == 0.0) == (model.H().array() == 0.0)).all());
    }
    CHECK(perturb_model(model, 0.2, 3).H == perturb_model(model, 0.2, 3).H);
    CHECK(perturb_model(model, 0.2, 3).weights != perturb_model(model, 0.2, 4).weights);
  }
  SUBCASE("fraction outside [0, 1)") {
    CHECK_THROWS_AS(perturb_model(model, 1.0, 1), InputError);
    CHECK_THROWS_AS(perturb_model(model, -0.1, 1), InputError);
  }
}

TEST_CASE("full-knowledge attacks") {
  const auto& model = ieee14();
  const Matrix& H = model.H();
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.05);
  std::bernoulli_distribution drop(0.15);

  SUBCASE("c = 0 is a no-op") {
    const auto atk = build_full_knowledge_attack(H, Vector::Zero(13), no_removal(54));
    CHECK(atk.a.isZero(0.0));
    CHECK(atk.integrity_count() == 0);
  }
  SUBCASE("d = 0 is classic FDI") {
    Vector c(13);
    for (auto& v : c) v = g(rng);
    const auto atk = build_full_knowledge_attack(H, c, no_removal(54), 4);
    CHECK((atk.a - H * c).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(atk.mu == atk.a(4));
  }
  SUBCASE("random masks: normalized and stealthy") {
    int built = 0;
    for (int t = 0; t < 100; ++t) {
      AvailabilityMask d(54);
      for (auto& v : d) v = drop(rng) ? 1 : 0;
      Vector c(13);
      for (auto& v : c) v = g(rng);
      if (!is_observable(H, d)) {
        CHECK_THROWS_AS(build_full_knowledge_attack(H, c, d), UnobservableError);
        continue;
      }
      ++built;
      const auto atk = build_full_knowledge_attack(H, c, d);
      for (std::size_t i = 0; i < 54; ++i)
        if (d[i]) CHECK(atk.a(static_cast<Eigen::Index>(i)) == 0.0);
      CHECK(atk.availability_count() == count_removed(d));
      CHECK(lambda_against(model, atk) <= 1e-12);
    }
    CHECK(built > 20);
  }
  SUBCASE("bad shapes") {
    CHECK_THROWS_AS(build_full_knowledge_attack(H, Vector::Zero(3), no_removal(54)), DimensionError);
    CHECK_THROWS_AS(build_full_knowledge_attack(H, Vector::Zero(13), no_removal(5)), DimensionError);
  }
}

TEST_CASE("tuple split") {
  const std::vector<std::size_t> t{9, 2, 5, 7};
  auto d = tuple_availability(t, 5, 1, 12);
  CHECK(d == AvailabilityMask{0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0});
  d = tuple_availability(t, 5, 2, 12);
  CHECK(d == AvailabilityMask{0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0});
  CHECK(count_removed(tuple_availability(t, 5, 4, 12)) == 0);
  CHECK_THROWS_AS(tuple_availability(t, 4, 1, 12), InputError);
  CHECK_THROWS_AS(tuple_availability(t, 5, 0, 12), InputError);
  CHECK_THROWS_AS(tuple_availability(t, 5, 5, 12), InputError);
}

TEST_CASE("tuple attacks on the 14-bus target 9") {
  const auto& model = ieee14();
  const auto& tuple = tuple9();
  REQUIRE(tuple.size() == 11);

  SUBCASE("every split is stealthy against its own model") {
    for (std::size_t ka = 1; ka <= tuple.size(); ++ka) {
      const auto atk = tuple_attack(model.H(), tuple, 8, ka, 0.1);
      CHECK(atk.integrity_count() == ka);
      CHECK(atk.availability_count() == tuple.size() - ka);
      CHECK(atk.a(8) == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(lambda_against(model, atk) <= 1e-12);
    }
  }
  SUBCASE("zero perturbation matches full knowledge") {
    const auto pm = perturb_model(model, 0.0, 1);
    const auto d = tuple_availability(tuple, 8, 2, 54);
    const Vector c = tuple_certificate(model.H(), tuple, 8, 0.1);
    const auto lim = build_limited_knowledge_attack(pm, c, d, 8);
    const auto full = build_full_knowledge_attack(model.H(), c, d, 8);
    CHECK(lim.a == full.a);
    CHECK(lim.d == full.d);
  }
  SUBCASE("perturbed certificates: (1, 10) stays stealthy, pure FDI does not") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      CAPTURE(seed);
      const auto pm = perturb_model(model, 0.2, seed);
      const auto comb = tuple_attack(pm.H, tuple, 8, 1, 0.1);
      CHECK(comb.integrity_count() == 1);
      CHECK(lambda_against(model, comb) <= 1e-10);
      const auto fdi = tuple_attack(pm.H, tuple, 8, tuple.size(), 0.1);
      CHECK(fdi.availability_count() == 0);
      CHECK(lambda_against(model, fdi) > 1e-8);
    }
  }
  SUBCASE("scale_attack") {
    const auto atk = tuple_attack(model.H(), tuple, 8, 2, 0.1);
    const auto same = scale_attack(atk, 0.1);
    CHECK((same.a - atk.a).cwiseAbs().maxCoeff() <= 1e-15);
    const auto pm = perturb_model(model, 0.2, 1);
    const auto fdi = tuple_attack(pm.H, tuple, 8, tuple.size(), 0.1);
    CHECK(lambda_against(model, scale_attack(fdi, 0.2)) ==
          doctest::Approx(4.0 * lambda_against(model, fdi)).epsilon(1e-12));
    const auto direct = tuple_attack(model.H(), tuple, 8, 2, 0.25);
    const auto scaled = scale_attack(atk, 0.25);
    CHECK((direct.a - scaled.a).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(direct.d == scaled.d);
    AttackVector zero = atk;
    zero.mu = 0.0;
    CHECK_THROWS_AS(scale_attack(zero, 0.1), InputError);
  }
}

TEST_CASE("attack documents") {
  const auto& model = ieee14();
  const auto atk = tuple_attack(model.H(), tuple9(), 8, 3, 0.1);
  const auto back = attack_from_json(attack_to_json(atk), 54);
  CHECK(back.a == atk.a);
  CHECK(back.d == atk.d);
  CHECK(back.target == atk.target);
  CHECK(back.mu == atk.mu);

  CHECK(attack_to_json(AttackVector{Vector::Zero(3), {0, 1, 0}, 0, 0.0}) ==
        "{\n  \"target\": 1,\n  \"mu\": 0.0,\n  \"a\": {},\n  \"d\": [\n    2\n  ]\n}");
  CHECK_THROWS_AS(attack_from_json(R"({"target": 1, "mu": 0.1, "a": {"4": 1.0}, "d": []})", 3), InputError);
  CHECK_THROWS_AS(attack_from_json(R"({"target": 1, "mu": 0.1, "a": {"2": 1.0}, "d": [2]})", 3), InputError);
  CHECK_THROWS_AS(attack_from_json(R"({"target": 1, "mu": 0.1, "a": {"x": 1.0}, "d": []})", 3), InputError);
  CHECK_THROWS_AS(attack_from_json(R"({"target": 0, "mu": 0.1, "a": {}, "d": []})", 3), InputError);
  CHECK_THROWS_AS(attack_from_json(R"({"target": 1, "a": {}, "d": []})", 3), InputError);
  CHECK_THROWS_AS(attack_from_json("[", 3), InputError);
}
