#include "gridrisk/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <json.hpp>

#include "gridrisk/security_index.hpp"

namespace gridrisk {

namespace {

// Entries below 1e-10·max|a| are round-off from H·c on rows outside the tuple.
void clear_dust(Vector& a) {
  const double big = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  if (big == 0.0) return;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::abs(a(i)) < 1e-10 * big) a(i) = 0.0;
}

AttackVector build_attack(const Matrix& H, const Vector& c, const AvailabilityMask& d, std::size_t target) {
  const auto m = static_cast<std::size_t>(H.rows());
  if (c.size() != H.cols())
    throw DimensionError("attack: certificate has length " + std::to_string(c.size()) + ", expected " +
                         std::to_string(H.cols()));
  if (d.size() != m) throw DimensionError("attack: availability vector length mismatch");
  if (target >= m) throw InputError("attack: target outside the measurement range");
  if (!is_observable(H, d)) throw UnobservableError("attack: masked model is unobservable");
  AttackVector out;
  out.a = mask_rows(H, d) * c;
  clear_dust(out.a);
  out.d = d;
  out.target = target;
  out.mu = out.a(static_cast<Eigen::Index>(target));
  return out;
}

}  // namespace

std::size_t AttackVector::integrity_count() const {
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) k += a(i) != 0.0;
  return k;
}

std::size_t AttackVector::availability_count() const { return count_removed(d); }

std::string attack_to_json(const AttackVector& attack) {
  nlohmann::ordered_json doc;
  doc["target"] = attack.target + 1;
  doc["mu"] = attack.mu;
  nlohmann::ordered_json a = nlohmann::ordered_json::object();
  for (Eigen::Index i = 0; i < attack.a.size(); ++i)
    if (attack.a(i) != 0.0) a[std::to_string(i + 1)] = attack.a(i);
  doc["a"] = a;
  nlohmann::ordered_json d = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < attack.d.size(); ++i)
    if (attack.d[i]) d.push_back(i + 1);
  doc["d"] = d;
  return doc.dump(2);
}

AttackVector attack_from_json(const std::string& document, std::size_t measurement_count) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("attack document: ") + e.what());
  }
  auto index = [&](const nlohmann::json& v, const std::string& where) -> std::size_t {
    if (!v.is_number_integer()) throw InputError(where + ": expected an integer index");
    const auto i = v.get<long long>();
    if (i < 1 || static_cast<std::size_t>(i) > measurement_count)
      throw InputError(where + ": index " + std::to_string(i) + " outside 1.." + std::to_string(measurement_count));
    return static_cast<std::size_t>(i - 1);
  };
  try {
    AttackVector out;
    out.a = Vector::Zero(static_cast<Eigen::Index>(measurement_count));
    out.d = no_removal(measurement_count);
    out.target = index(doc.at("target"), "target");
    out.mu = doc.at("mu").get<double>();
    for (const auto& [key, value] : doc.at("a").items()) {
      std::size_t pos = 0;
      long long raw = 0;
      try {
        raw = std::stoll(key, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != key.size()) throw InputError("a." + key + ": keys must be measurement indices");
      const std::size_t i = index(nlohmann::json(raw), "a." + key);
      out.a(static_cast<Eigen::Index>(i)) = value.get<double>();
    }
    for (const auto& v : doc.at("d")) out.d[index(v, "d")] = 1;
    for (std::size_t i = 0; i < measurement_count; ++i)
      if (out.d[i] && out.a(static_cast<Eigen::Index>(i)) != 0.0)
        throw InputError("attack document: measurement " + std::to_string(i + 1) +
                         " is both removed and falsified");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("attack document: ") + e.what());
  }
}

PerturbedModel perturb_model(const GridModel& model, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("perturbation fraction must lie in [0, 1)");
  PerturbedModel out;
  out.fraction = fraction;
  out.seed = seed;
  out.weights = model.line_weights();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-fraction, fraction);
  for (Eigen::Index l = 0; l < out.weights.size(); ++l) {
    const double e = fraction > 0.0 ? u(rng) : 0.0;
    out.weights(l) *= 1.0 + e;
  }
  out.H = model.assemble(out.weights);
  return out;
}

AttackVector build_full_knowledge_attack(const Matrix& H, const Vector& c, const AvailabilityMask& d,
                                         std::size_t target) {
  return build_attack(H, c, d, target);
}

AttackVector build_limited_knowledge_attack(const PerturbedModel& perturbed, const Vector& c,
                                            const AvailabilityMask& d, std::size_t target) {
  return build_attack(perturbed.H, c, d, target);
}

AttackVector scale_attack(const AttackVector& attack, double mu_new) {
  if (attack.mu == 0.0) throw InputError("scale_attack: attack has zero magnitude");
  AttackVector out = attack;
  out.a *= mu_new / attack.mu;
  out.mu = mu_new;
  return out;
}

AvailabilityMask tuple_availability(const std::vector<std::size_t>& tuple, std::size_t target, std::size_t k_a,
                                    std::size_t measurement_count) {
  if (std::find(tuple.begin(), tuple.end(), target) == tuple.end())
    throw InputError("tuple split: tuple must contain the target");
  if (k_a < 1 || k_a > tuple.size())
    throw InputError("tuple split: k_a must lie in 1.." + std::to_string(tuple.size()));
  std::vector<std::size_t> others;
  for (auto i : tuple) {
    if (i >= measurement_count) throw InputError("tuple split: row outside the measurement range");
    if (i != target) others.push_back(i);
  }
  std::sort(others.begin(), others.end());
  AvailabilityMask d = no_removal(measurement_count);
  for (std::size_t k = k_a - 1; k < others.size(); ++k) d[others[k]] = 1;
  return d;
}

AttackVector tuple_attack(const Matrix& H_attacker, const std::vector<std::size_t>& tuple, std::size_t target,
                          std::size_t k_a, double mu) {
  const auto d = tuple_availability(tuple, target, k_a, static_cast<std::size_t>(H_attacker.rows()));
  const Vector c = tuple_certificate(H_attacker, tuple, target, mu);
  return build_attack(H_attacker, c, d, target);
}

}  // namespace gridrisk
