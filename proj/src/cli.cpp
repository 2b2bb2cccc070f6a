#include "gridrisk/cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridrisk/attack.hpp"
#include "gridrisk/format.hpp"
#include "gridrisk/network_model.hpp"
#include "gridrisk/risk.hpp"
#include "gridrisk/security_index.hpp"

#ifndef GRIDRISK_VERSION
#define GRIDRISK_VERSION "dev"
#endif

namespace gridrisk::cli {

namespace {

using json = nlohmann::ordered_json;

struct Settings {
  std::string command;
  std::string case_path;
  std::string out;
  std::size_t target = 0;  // 1-based, 0 = unset
  double mu = 0.1;
  double mu_max = 0.5;
  std::size_t mu_points = 200;
  std::vector<double> mu_grid;
  double alpha = 0.05;
  double cost_integrity = 1.0;
  double cost_availability = std::numeric_limits<double>::quiet_NaN();
  double perturb = 0.2;
  std::uint64_t seed = 1;
  std::size_t runs = 1000;
  bool empirical = false;
};

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

json to_manifest(const Settings& s) {
  json m;
  m["tool"] = "gridrisk";
  m["version"] = GRIDRISK_VERSION;
  m["command"] = s.command;
  m["case"] = s.case_path;
  m["seed"] = s.seed;
  m["alpha"] = s.alpha;
  m["mu"] = s.mu;
  m["mu_max"] = s.mu_max;
  m["mu_points"] = s.mu_points;
  m["mu_grid"] = s.mu_grid;
  m["cost_integrity"] = s.cost_integrity;
  m["cost_availability"] = s.cost_availability;
  m["perturb"] = s.perturb;
  m["runs"] = s.runs;
  m["empirical"] = s.empirical;
  m["target"] = s.target;
  m["outputs"] = json::array({s.out});
  return m;
}

Settings from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("manifest not found: " + path);
  json m;
  try {
    m = json::parse(in);
    Settings s;
    s.command = m.at("command").get<std::string>();
    s.case_path = m.at("case").get<std::string>();
    s.seed = m.at("seed").get<std::uint64_t>();
    s.alpha = m.at("alpha").get<double>();
    s.mu = m.at("mu").get<double>();
    s.mu_max = m.at("mu_max").get<double>();
    s.mu_points = m.at("mu_points").get<std::size_t>();
    s.mu_grid = m.at("mu_grid").get<std::vector<double>>();
    s.cost_integrity = m.at("cost_integrity").get<double>();
    s.cost_availability = m.at("cost_availability").get<double>();
    s.perturb = m.at("perturb").get<double>();
    s.runs = m.at("runs").get<std::size_t>();
    s.empirical = m.at("empirical").get<bool>();
    s.target = m.at("target").get<std::size_t>();
    s.out = m.at("outputs").at(0).get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest " + path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed: " + path);
}

void check_common(const Settings& s) {
  if (!(s.cost_integrity >= 0.0) || !(s.cost_availability >= 0.0))
    throw InputError("costs must be non-negative");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
}

std::vector<double> mu_grid_of(const Settings& s) {
  if (!s.mu_grid.empty()) {
    for (double v : s.mu_grid)
      if (!std::isfinite(v) || v < 0.0) throw InputError("--mu-grid values must be finite and non-negative");
    return s.mu_grid;
  }
  return default_mu_grid(s.mu_max, s.mu_points);
}

std::string run_index(const Settings& s, std::ostream& out) {
  check_common(s);
  const auto model = build_model(load_case_file(s.case_path));
  const auto rows = index_sweep(model.H(), s.mu, s.cost_integrity, s.cost_availability);
  out << "measurements: " << rows.size() << '\n';
  return index_table_csv(rows);
}

// FDI and combined variants on the target's critical tuple, all built from the
// attacker's perturbed model.
std::vector<NamedAttack> tuple_variants(const GridModel& model, const Settings& s, std::ostream& out) {
  if (s.target < 1 || s.target > model.measurement_count())
    throw InputError("--target must lie in 1.." + std::to_string(model.measurement_count()));
  if (!(s.perturb >= 0.0 && s.perturb < 1.0)) throw InputError("--perturb must lie in [0, 1)");
  const std::size_t j = s.target - 1;
  const auto perturbed = perturb_model(model, s.perturb, s.seed);
  IndexQuery q;
  q.target = j;
  q.mu = 0.1;
  const auto tuple = combined_index(perturbed.H, q).tuple();
  const std::size_t t = tuple.size();
  out << "critical tuple (" << t << "): " << format_index_list(tuple) << '\n';

  std::vector<std::size_t> splits{1};
  if (t >= 3) splits.push_back(2);
  if (t >= 2) splits.push_back(t);
  std::vector<NamedAttack> attacks;
  for (auto k_a : splits) {
    const std::string id = k_a == t ? "fdi_" + std::to_string(t)
                                    : "combined_" + std::to_string(k_a) + "_" + std::to_string(t - k_a);
    attacks.push_back({id, tuple_attack(perturbed.H, tuple, j, k_a, 0.1)});
  }
  return attacks;
}

std::string run_detect(const Settings& s, std::ostream& out) {
  check_common(s);
  const auto model = build_model(load_case_file(s.case_path));
  const auto attacks = tuple_variants(model, s, out);
  RiskConfig cfg;
  cfg.alpha = s.alpha;
  cfg.empirical_runs = s.empirical ? s.runs : 0;
  cfg.seed = s.seed;
  if (s.empirical && s.runs < 1) throw InputError("--runs must be at least 1");
  const auto curves = risk_sweep(model, attacks, mu_grid_of(s), cfg);

  std::ostringstream csv;
  csv << "mu";
  for (const auto& c : curves) {
    csv << ",lambda_" << c.id << ",delta_" << c.id;
    if (s.empirical) csv << ",delta_empirical_" << c.id;
  }
  csv << '\n';
  const std::size_t points = curves.front().points.size();
  for (std::size_t p = 0; p < points; ++p) {
    csv << format_number(curves.front().points[p].mu);
    for (const auto& c : curves) {
      csv << ',' << format_number(c.points[p].lambda) << ',' << format_number(c.points[p].delta);
      if (s.empirical) csv << ',' << format_number(c.points[p].delta_empirical);
    }
    csv << '\n';
  }
  return csv.str();
}

std::string run_risk(const Settings& s, std::ostream& out) {
  check_common(s);
  const auto model = build_model(load_case_file(s.case_path));
  const auto attacks = tuple_variants(model, s, out);
  RiskConfig cfg;
  cfg.alpha = s.alpha;
  cfg.cost_integrity = s.cost_integrity;
  cfg.cost_availability = s.cost_availability;
  cfg.empirical_runs = s.empirical ? s.runs : 0;
  cfg.seed = s.seed;
  const auto curves = risk_sweep(model, attacks, mu_grid_of(s), cfg);
  for (const auto& r : compare_attacks(curves))
    out << "rank " << r.rank << ": " << r.id << " peak risk " << format_number(r.peak_risk) << " at mu "
        << format_number(r.peak_mu) << '\n';
  return risk_points_csv(curves);
}

int execute(const Settings& s, std::ostream& out) {
  std::string text;
  if (s.command == "index") text = run_index(s, out);
  else if (s.command == "detect") text = run_detect(s, out);
  else if (s.command == "risk") text = run_risk(s, out);
  else throw InputError("unknown command '" + s.command + "'");
  write_file(s.out, text);
  write_file(manifest_path(s.out), to_manifest(s).dump(2) + "\n");
  out << "wrote " << s.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Security-index and risk analysis for DC state estimation"};
  app.set_version_flag("--version", GRIDRISK_VERSION);
  app.require_subcommand(1);

  Settings s;
  std::string manifest;
  std::string replay_out;
  bool cost_a_given = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--case", s.case_path, "case JSON file")->required();
    sub->add_option("--out", s.out, "output CSV (a manifest is written next to it)");
    sub->add_option("--alpha", s.alpha, "false-alarm rate")->capture_default_str();
  };
  auto attack_opts = [&](CLI::App* sub) {
    sub->add_option("--target", s.target, "target measurement (1-based)")->required();
    sub->add_option("--perturb", s.perturb, "attacker line-parameter error fraction")->capture_default_str();
    sub->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
    sub->add_option("--mu-max", s.mu_max, "largest attack magnitude")->capture_default_str();
    sub->add_option("--mu-points", s.mu_points, "number of magnitudes")->capture_default_str();
    sub->add_option("--mu-grid", s.mu_grid, "explicit comma-separated magnitudes")->delimiter(',');
    sub->add_option("--runs", s.runs, "Monte Carlo runs per point")->capture_default_str();
    sub->add_flag("--empirical", s.empirical, "add Monte Carlo detection rates");
  };

  auto* index = app.add_subcommand("index", "security indices for every measurement");
  common(index);
  index->add_option("--mu", s.mu, "attack magnitude")->capture_default_str();
  index->add_option("--cost-integrity", s.cost_integrity)->capture_default_str();
  index->add_option("--cost-availability", s.cost_availability, "default 0.5")
      ->each([&](const std::string&) { cost_a_given = true; });

  auto* detect = app.add_subcommand("detect", "detection probability versus attack magnitude");
  common(detect);
  attack_opts(detect);

  auto* risk = app.add_subcommand("risk", "risk metric versus attack magnitude");
  common(risk);
  attack_opts(risk);
  risk->add_option("--cost-integrity", s.cost_integrity)->capture_default_str();
  risk->add_option("--cost-availability", s.cost_availability, "default 1")
      ->each([&](const std::string&) { cost_a_given = true; });

  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest, "manifest JSON")->required();
  replay->add_option("--out", replay_out, "write to this path instead of the recorded one");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (replay->parsed()) {
      Settings r = from_manifest(manifest);
      if (!replay_out.empty()) r.out = replay_out;
      return execute(r, out);
    }
    if (index->parsed()) s.command = "index";
    else if (detect->parsed()) s.command = "detect";
    else s.command = "risk";
    if (!cost_a_given) s.cost_availability = s.command == "index" ? 0.5 : 1.0;
    if (s.out.empty()) s.out = "gridrisk_" + s.command + ".csv";
    return execute(s, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace gridrisk::cli
