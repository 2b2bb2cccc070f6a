#include "gridrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gridrisk/attack.hpp"
#include "gridrisk/detector.hpp"
#include "gridrisk/format.hpp"
#include "gridrisk/parallel.hpp"

namespace gridrisk {

namespace {

std::vector<std::size_t> attack_tuple(const AttackVector& a) {
  std::vector<std::size_t> t;
  for (std::size_t i = 0; i < a.measurement_count(); ++i)
    if (a.a(static_cast<Eigen::Index>(i)) != 0.0 || (!a.d.empty() && a.d[i])) t.push_back(i);
  return t;
}

AvailabilityMask effective_mask(const AttackVector& a) {
  return a.d.empty() ? no_removal(a.measurement_count()) : a.d;
}

}  // namespace

ImpactAnalysis impact_metric(const GridModel& model, const AttackVector& attack, const EstimatorGains& gains) {
  if (attack.measurement_count() != gains.measurement_count())
    throw DimensionError("impact: attack length does not match the gains");
  if (effective_mask(attack) != gains.removed)
    throw InputError("impact: gains were computed for a different availability vector");
  ImpactAnalysis out;
  out.injection_rows = model.injection_rows();
  out.H_inj.resize(static_cast<Eigen::Index>(out.injection_rows.size()), model.H().cols());
  for (std::size_t r = 0; r < out.injection_rows.size(); ++r)
    out.H_inj.row(static_cast<Eigen::Index>(r)) = model.H().row(static_cast<Eigen::Index>(out.injection_rows[r]));
  out.bias = out.H_inj * (gains.K * attack.a);
  out.impact = out.bias.norm();
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

MonteCarloReport empirical_detection(const GridModel& model, const AttackVector& attack, double alpha,
                                     std::size_t runs, std::uint64_t seed) {
  if (runs < 1) throw InputError("empirical detection: runs must be at least 1");
  if (attack.measurement_count() != model.measurement_count())
    throw DimensionError("empirical detection: attack length does not match the model");
  const auto gains = compute_reduced_gains(model, effective_mask(attack));
  if (gains.dof < 1) throw UnobservableError("empirical detection: no residual degrees of freedom left");
  const auto config = make_bdd_config(alpha, gains.dof);
  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(model.state_dim()));

  std::vector<std::uint8_t> alarm(runs, 0);
  parallel_for(runs, [&](std::size_t r) {
    const auto snap = synthesize_measurements(model, x0, derive_seed(seed, r));
    const Vector za = snap.z + attack.a;
    const auto verdict = j_test(residual(gains, za), model.sigma(), config, gains.removed);
    alarm[r] = verdict.verdict == Verdict::Bad;
  });

  MonteCarloReport rep;
  rep.runs = runs;
  rep.seed = seed;
  for (auto a : alarm) rep.alarms += a;
  const double n = static_cast<double>(runs);
  const double p = static_cast<double>(rep.alarms) / n;
  rep.empirical_delta = p;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  rep.ci_low = std::max(0.0, std::min(p, centre - half));
  rep.ci_high = std::min(1.0, std::max(p, centre + half));
  return rep;
}

std::vector<double> default_mu_grid(double mu_max, std::size_t points) {
  if (!(mu_max > 0.0) || points == 0) throw InputError("mu grid: need mu_max > 0 and at least one point");
  std::vector<double> g(points);
  for (std::size_t k = 1; k <= points; ++k) g[k - 1] = mu_max * static_cast<double>(k) / static_cast<double>(points);
  return g;
}

std::vector<RiskCurve> risk_sweep(const GridModel& model, const std::vector<NamedAttack>& attacks,
                                  const std::vector<double>& mu_grid, const RiskConfig& config) {
  if (attacks.empty()) throw InputError("risk sweep: no attacks given");
  const auto tuple0 = attack_tuple(attacks.front().attack);
  auto cost = [&](const AttackVector& a) {
    return config.cost_integrity * static_cast<double>(a.integrity_count()) +
           config.cost_availability * static_cast<double>(a.availability_count());
  };
  const double cost0 = cost(attacks.front().attack);
  for (const auto& na : attacks) {
    if (na.attack.measurement_count() != model.measurement_count())
      throw DimensionError("risk sweep: attack '" + na.id + "' has the wrong length");
    if (attack_tuple(na.attack) != tuple0)
      throw InputError("risk sweep: attack '" + na.id + "' targets a different critical tuple");
    if (std::abs(cost(na.attack) - cost0) > 1e-9 * std::max(1.0, cost0))
      throw InputError("risk sweep: attack '" + na.id + "' has a different cost-weighted index");
  }

  std::vector<RiskCurve> curves;
  for (std::size_t k = 0; k < attacks.size(); ++k) {
    const auto& base = attacks[k].attack;
    const auto gains = compute_reduced_gains(model, effective_mask(base));
    const double tau = chi2_threshold(config.alpha, gains.dof);
    RiskCurve curve;
    curve.id = attacks[k].id;
    curve.k_a = base.integrity_count();
    curve.k_d = base.availability_count();
    curve.points.resize(mu_grid.size());
    const std::uint64_t attack_seed = derive_seed(config.seed, k);
    parallel_for(mu_grid.size(), [&](std::size_t p) {
      const AttackVector a = scale_attack(base, mu_grid[p]);
      RiskPoint& pt = curve.points[p];
      pt.mu = mu_grid[p];
      pt.k_a = curve.k_a;
      pt.k_d = curve.k_d;
      pt.lambda = noncentrality(a.a, gains);
      pt.delta = 1.0 - noncentral_chi2_cdf(tau, gains.dof, pt.lambda);
      pt.impact = impact_metric(model, a, gains).impact;
      pt.risk = (1.0 - pt.delta) * pt.impact;
    });
    // Monte Carlo runs parallelize internally; keep the outer loop sequential.
    if (config.empirical_runs > 0)
      for (std::size_t p = 0; p < mu_grid.size(); ++p)
        curve.points[p].delta_empirical =
            empirical_detection(model, scale_attack(base, mu_grid[p]), config.alpha, config.empirical_runs,
                                derive_seed(attack_seed, p))
                .empirical_delta;
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::vector<RiskRank> compare_attacks(const std::vector<RiskCurve>& curves, double fixed_mu) {
  if (curves.empty()) throw InputError("compare attacks: empty input");
  std::vector<RiskRank> out;
  for (const auto& c : curves) {
    if (c.points.empty()) throw InputError("compare attacks: curve '" + c.id + "' has no points");
    RiskRank r;
    r.id = c.id;
    r.k_a = c.k_a;
    r.k_d = c.k_d;
    r.peak_risk = -1.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points) {
      if (p.risk > r.peak_risk) {
        r.peak_risk = p.risk;
        r.peak_mu = p.mu;
      }
      const double gap = std::abs(p.mu - fixed_mu);
      if (gap < best_gap) {
        best_gap = gap;
        r.risk_at_mu = p.risk;
      }
    }
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const RiskRank& a, const RiskRank& b) {
    if (a.peak_risk != b.peak_risk) return a.peak_risk > b.peak_risk;
    return a.k_a < b.k_a;
  });
  for (std::size_t k = 0; k < out.size(); ++k) {
    const bool same = k > 0 && out[k].peak_risk == out[k - 1].peak_risk && out[k].k_a == out[k - 1].k_a;
    out[k].rank = same ? out[k - 1].rank : k + 1;
  }
  return out;
}

std::string risk_points_csv(const std::vector<RiskCurve>& curves) {
  std::ostringstream out;
  out << "attack_id,mu,k_a,k_d,lambda,delta_theory,delta_empirical,impact,risk\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.id << ',' << format_number(p.mu) << ',' << p.k_a << ',' << p.k_d << ','
          << format_number(p.lambda) << ',' << format_number(p.delta) << ','
          << (p.delta_empirical < 0.0 ? std::string() : format_number(p.delta_empirical)) << ','
          << format_number(p.impact) << ',' << format_number(p.risk) << '\n';
  return out.str();
}

}  // namespace gridrisk
