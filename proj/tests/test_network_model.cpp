#include <doctest.h>

#include <random>
#include <string>

#include "gridrisk/network_model.hpp"
#include "support.hpp"

using namespace gridrisk;

namespace {

const char* kChain = R"({
  "base_mva": 100,
  "buses": [{"id": 1, "reference": true}, {"id": 2, "reference": false}, {"id": 3, "reference": false}],
  "lines": [{"id": 1, "from": 1, "to": 2, "reactance": 1.0}, {"id": 2, "from": 2, "to": 3, "reactance": 1.0}],
  "measurements": [
    {"kind": "flow_from", "element": 1, "sigma": 0.02},
    {"kind": "flow_from", "element": 2, "sigma": 0.02},
    {"kind": "flow_to", "element": 1, "sigma": 0.02},
    {"kind": "flow_to", "element": 2, "sigma": 0.02},
    {"kind": "injection", "element": 1, "sigma": 0.02},
    {"kind": "injection", "element": 2, "sigma": 0.02},
    {"kind": "injection", "element": 3, "sigma": 0.02}
  ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string error_of(const std::string& doc) {
  try {
    load_case(doc);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load_case maps the 3-bus chain") {
  const auto c = load_case(kChain);
  CHECK(c.buses.size() == 3);
  CHECK(c.lines.size() == 2);
  CHECK(c.measurements.size() == 7);
  CHECK(c.buses[0].reference);
  CHECK(c.lines[1].from_bus == 2);
  CHECK(c.measurements[4].kind == MeasurementKind::Injection);
}

TEST_CASE("bundled 14-bus case") {
  const auto c = load_case_file(testing::case_path("ieee14.json"));
  CHECK(c.buses.size() == 14);
  CHECK(c.lines.size() == 20);
  const auto model = build_model(c);
  CHECK(model.measurement_count() == 54);
  CHECK(model.state_dim() == 13);
  CHECK(numerical_rank(model.H()) == 13);
}

TEST_CASE("case validation errors carry a field path") {
  CHECK(error_of(replace(kChain, "\"reactance\": 1.0}, {\"id\": 2", "\"reactance\": 0}, {\"id\": 2")) ==
        "lines[0].reactance: non-positive reactance");
  CHECK(error_of(replace(kChain, "\"sigma\": 0.02},\n    {\"kind\": \"flow_from\", \"element\": 2",
                         "\"sigma\": -1},\n    {\"kind\": \"flow_from\", \"element\": 2")) ==
        "measurements[0].sigma: non-positive sigma");
  CHECK(error_of(replace(kChain, "\"reference\": true", "\"reference\": false")) == "case.buses: missing reference bus");
  CHECK(error_of(replace(kChain, "{\"id\": 2, \"reference\": false}", "{\"id\": 1, \"reference\": false}"))
            .find("duplicate bus id 1") != std::string::npos);
  CHECK(error_of(replace(kChain, "\"to\": 3", "\"to\": 9")) == "lines[1].to: undeclared bus 9");
  CHECK(error_of(replace(kChain, "\"base_mva\": 100", "\"base_mva\": 100, \"extra\": 1")) == "case.extra: unknown key");
  CHECK(error_of(replace(kChain, "\"kind\": \"flow_to\", \"element\": 1", "\"kind\": \"flow_mid\", \"element\": 1"))
            .find("unknown measurement kind") != std::string::npos);
  CHECK(error_of("{not json").find("parse error") != std::string::npos);
  CHECK_THROWS_WITH_AS(load_case_file(testing::case_path("missing.json")), doctest::Contains("case not found"),
                       InputError);
}

TEST_CASE("H rows of the 3-bus chain") {
  const auto model = build_model(load_case(kChain));
  const Matrix& H = model.H();
  REQUIRE(H.rows() == 7);
  REQUIRE(H.cols() == 2);
  // Line 1 runs from the reference bus: flow = (θ1 − θ2)/x = −θ2.
  CHECK(H(0, 0) == -1.0);
  CHECK(H(0, 1) == 0.0);
  CHECK(H(1, 0) == 1.0);
  CHECK(H(1, 1) == -1.0);
  CHECK(H.row(2) == -H.row(0));
  // Reversing the line flips the sign.
  const auto flipped = build_model(load_case(replace(kChain, "\"from\": 1, \"to\": 2", "\"from\": 2, \"to\": 1")));
  CHECK(flipped.H()(0, 0) == 1.0);
}

TEST_CASE("model structure on every bundled case") {
  for (const char* name : {"chain3", "chain3_minimal", "ring4", "ieee14"}) {
    CAPTURE(name);
    const auto model = testing::load_model(name);
    const Matrix& B0 = model.incidence_full();
    for (Eigen::Index l = 0; l < B0.cols(); ++l) {
      CHECK(B0.col(l).sum() == 0.0);
      int plus = 0, minus = 0, zero = 0;
      for (Eigen::Index b = 0; b < B0.rows(); ++b) {
        if (B0(b, l) == 1.0) ++plus;
        else if (B0(b, l) == -1.0) ++minus;
        else if (B0(b, l) == 0.0) ++zero;
      }
      CHECK(plus == 1);
      CHECK(minus == 1);
      CHECK(zero == B0.rows() - 2);
    }

    const Matrix& P = model.selector();
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      CHECK(P.row(i).sum() == 1.0);
      CHECK((P.row(i).array() == 1.0).count() == 1);
      CHECK((P.row(i).array() == 0.0).count() == P.cols() - 1);
    }
    CHECK((model.line_weights().array() > 0.0).all());

    // Rebuild H by hand: flows WBᵀ, injections as signed sums of flows.
    const auto Bd = testing::to_dense(model.incidence_truncated());
    const auto B0d = testing::to_dense(B0);
    const auto& W = model.line_weights();
    const std::size_t nt = model.line_count(), n = model.state_dim();
    testing::Dense flow(nt, std::vector<double>(n, 0.0));
    for (std::size_t l = 0; l < nt; ++l)
      for (std::size_t k = 0; k < n; ++k) flow[l][k] = W(static_cast<Eigen::Index>(l)) * Bd[k][l];
    for (std::size_t i = 0; i < model.measurement_count(); ++i) {
      const auto& lab = model.labels()[i];
      std::vector<double> row(n, 0.0);
      if (lab.kind == MeasurementKind::FlowFrom) row = flow[lab.element_index];
      if (lab.kind == MeasurementKind::FlowTo)
        for (std::size_t k = 0; k < n; ++k) row[k] = -flow[lab.element_index][k];
      if (lab.kind == MeasurementKind::Injection)
        for (std::size_t l = 0; l < nt; ++l)
          for (std::size_t k = 0; k < n; ++k) row[k] += B0d[lab.element_index][l] * flow[l][k];
      for (std::size_t k = 0; k < n; ++k)
        CHECK(model.H()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) ==
              doctest::Approx(row[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("unobservable plan is rejected") {
  // Only the flow on line 1: bus 3 is invisible.
  std::string doc = kChain;
  const auto start = doc.find("\"measurements\"");
  doc = doc.substr(0, start) + R"("measurements": [{"kind": "flow_from", "element": 1, "sigma": 0.02}]})";
  CHECK_THROWS_AS(build_model(load_case(doc)), UnobservableError);
}

TEST_CASE("rank and observability agree with an elimination oracle") {
  const auto model = testing::load_model("ieee14");
  const Matrix& H = model.H();
  std::mt19937_64 rng(7);
  std::bernoulli_distribution drop(0.35);
  for (int trial = 0; trial < 200; ++trial) {
    AvailabilityMask d(model.measurement_count());
    for (auto& v : d) v = drop(rng) ? 1 : 0;
    const Matrix Hd = mask_rows(H, d);
    const std::size_t oracle = testing::naive_rank(testing::to_dense(Hd));
    CHECK(numerical_rank(Hd) == oracle);
    CHECK(is_observable(H, d) == (oracle == model.state_dim()));
  }
}

TEST_CASE("synthesize_measurements") {
  const auto model = testing::load_model("ieee14");
  Vector x(model.state_dim());
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = 0.01 * static_cast<double>(k + 1);

  SUBCASE("zero sigma gives exact data") {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(model.measurement_count()));
    const auto s = synthesize_measurements(model.H(), zero, x, 3);
    CHECK((s.z - model.H() * x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("same seed, same snapshot") {
    const auto a = synthesize_measurements(model, x, 11);
    const auto b = synthesize_measurements(model, x, 11);
    const auto c = synthesize_measurements(model, x, 12);
    CHECK(a.z == b.z);
    CHECK(a.z != c.z);
    CHECK(a.noise_seed == 11);
  }
  SUBCASE("per-row spread matches sigma") {
    const int draws = 10000;
    const Eigen::Index m = static_cast<Eigen::Index>(model.measurement_count());
    Vector sum = Vector::Zero(m), sq = Vector::Zero(m);
    const Vector Hx = model.H() * x;
    for (int s = 0; s < draws; ++s) {
      const Vector e = synthesize_measurements(model, x, static_cast<std::uint64_t>(s)).z - Hx;
      sum += e;
      sq += e.cwiseProduct(e);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mean = sum(i) / draws;
      const double sd = std::sqrt(sq(i) / draws - mean * mean);
      CHECK(std::abs(sd - 0.02) <= 0.05 * 0.02);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(synthesize_measurements(model, Vector::Zero(3), 1), DimensionError);
  }
}
