#include "gridrisk/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>

#include "gridrisk/common.hpp"

namespace gridrisk::milp {

namespace {

constexpr double kCutViolation = 1e-6;
constexpr double kBoundTolerance = 1e-9;

// Final basis of an LP with its rows named by key (see BranchAndBound::row_keys)
// so that a later LP with a different row set can start from it.
struct KeyedBasis {
  std::vector<BasisStatus> columns;
  std::unordered_map<std::size_t, BasisStatus> rows;
};

struct Node {
  double bound = -kInfinity;
  long id = 0;
  std::vector<std::int8_t> fix;  // -1 free, otherwise the fixed value
  std::vector<std::uint8_t> group_on;
  std::vector<std::size_t> cuts;
  std::shared_ptr<const KeyedBasis> start;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

void validate(const MilpProblem& p, const MilpOptions& o) {
  const std::size_t n = p.variable_count();
  if (p.objective.size() != n)
    throw InputError("milp: objective has " + std::to_string(p.objective.size()) + " entries for " +
                     std::to_string(n) + " variables");
  if (p.continuous_lower.size() != p.continuous_count || p.continuous_upper.size() != p.continuous_count)
    throw InputError("milp: continuous bound vectors have the wrong length");
  if (p.binary_count > o.max_binaries)
    throw InputError("milp: " + std::to_string(p.binary_count) + " binaries exceeds limit " +
                     std::to_string(o.max_binaries));
  if (p.constraints.empty()) throw InputError("milp: at least one constraint is required");
  for (double c : p.objective)
    if (!std::isfinite(c)) throw InputError("milp: non-finite objective coefficient");
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    if (!std::isfinite(c.rhs)) throw InputError("milp: constraint " + std::to_string(i) + " has non-finite rhs");
    for (const auto& t : c.terms) {
      if (t.index >= n)
        throw InputError("milp: constraint " + std::to_string(i) + " references variable " +
                         std::to_string(t.index));
      if (!std::isfinite(t.coeff))
        throw InputError("milp: constraint " + std::to_string(i) + " has a non-finite coefficient");
    }
  }
  for (const auto& g : p.branch_groups)
    for (auto k : g)
      if (k >= p.binary_count) throw InputError("milp: branch group references unknown binary");
}

// Common step of all binary costs when the objective only prices binaries
// with commensurable weights; 0 when no such step exists.
double objective_granularity(const MilpProblem& p) {
  for (std::size_t j = 0; j < p.continuous_count; ++j)
    if (p.objective[j] != 0.0) return 0.0;
  double g = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < p.binary_count; ++k) scale = std::max(scale, std::abs(p.objective[p.binary_var(k)]));
  if (scale == 0.0) return 0.0;
  const double eps = 1e-9 * scale;
  for (std::size_t k = 0; k < p.binary_count; ++k) {
    double a = std::abs(p.objective[p.binary_var(k)]);
    if (a == 0.0) continue;
    if (g == 0.0) {
      g = a;
      continue;
    }
    double x = std::max(a, g);
    double y = std::min(a, g);
    while (y > eps) {
      const double r = std::fmod(x, y);
      x = y;
      y = (r < eps || y - r < eps) ? 0.0 : r;
    }
    g = x;
  }
  if (g < 1e-6 * scale) return 0.0;
  for (std::size_t k = 0; k < p.binary_count; ++k) {
    const double q = std::abs(p.objective[p.binary_var(k)]) / g;
    if (std::abs(q - std::round(q)) > 1e-7) return 0.0;
  }
  return g;
}

std::string cut_key(const LinearConstraint& c) {
  std::vector<Term> t = c.terms;
  std::sort(t.begin(), t.end(), [](const Term& a, const Term& b) { return a.index < b.index; });
  std::string key;
  char buf[64];
  for (const auto& x : t) {
    std::snprintf(buf, sizeof buf, "%zu:%.12g,", x.index, x.coeff);
    key += buf;
  }
  std::snprintf(buf, sizeof buf, "|%d|%.12g", static_cast<int>(c.relation), c.rhs);
  return key + buf;
}

class BranchAndBound {
 public:
  BranchAndBound(const MilpProblem& p, const MilpOptions& o) : p_(p), opt_(o) {
    for (const auto& c : p.constraints) {
      if (!c.terms.empty()) {
        rows_.push_back(c);
        continue;
      }
      // Empty row: 0 (rel) rhs either always holds or makes the problem infeasible.
      const bool ok = (c.relation == Relation::LessEqual && 0.0 <= c.rhs + o.feasibility_tolerance) ||
                      (c.relation == Relation::GreaterEqual && 0.0 >= c.rhs - o.feasibility_tolerance) ||
                      (c.relation == Relation::Equal && std::abs(c.rhs) <= o.feasibility_tolerance);
      if (!ok) trivially_infeasible_ = true;
    }
    granularity_ = objective_granularity(p);
  }

  MilpSolution run() {
    MilpSolution out;
    if (trivially_infeasible_) return out;

    Node root;
    root.fix.assign(p_.binary_count, -1);
    root.group_on.assign(p_.branch_groups.size(), 0);
    root.id = next_id_++;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(std::move(root));

    bool limit_hit = false;
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      if (prunable(node.bound)) continue;
      if (out.node_count >= opt_.node_limit) {
        limit_hit = true;
        break;
      }
      ++out.node_count;
      process(node, open);
    }
    out.lp_count = lp_count_;
    out.cut_count = pool_.size();

    if (limit_hit) out.status = MilpStatus::IterationLimit;
    else out.status = has_incumbent_ ? MilpStatus::Optimal : MilpStatus::Infeasible;
    if (has_incumbent_) {
      out.objective_value = incumbent_value_;
      out.continuous_values.assign(incumbent_.begin(), incumbent_.begin() + static_cast<std::ptrdiff_t>(p_.continuous_count));
      out.binary_values.resize(p_.binary_count);
      for (std::size_t k = 0; k < p_.binary_count; ++k)
        out.binary_values[k] = incumbent_[p_.binary_var(k)] > 0.5 ? 1 : 0;
    }
    return out;
  }

 private:
  double effective_bound(double b) const {
    if (granularity_ > 0.0) return granularity_ * std::ceil(b / granularity_ - 1e-6);
    return b;
  }

  bool prunable(double b) const {
    if (!has_incumbent_) return false;
    return effective_bound(b) >= incumbent_value_ - kBoundTolerance * std::max(1.0, std::abs(incumbent_value_));
  }

  LpProblem node_lp(const Node& node, const std::vector<std::size_t>& active) const {
    LpProblem lp;
    lp.objective = p_.objective;
    lp.lower = p_.continuous_lower;
    lp.upper = p_.continuous_upper;
    for (std::size_t k = 0; k < p_.binary_count; ++k) {
      const double lo = node.fix[k] < 0 ? 0.0 : node.fix[k];
      const double hi = node.fix[k] < 0 ? 1.0 : node.fix[k];
      lp.lower.push_back(lo);
      lp.upper.push_back(hi);
    }
    lp.constraints = rows_;
    for (std::size_t g = 0; g < p_.branch_groups.size(); ++g) {
      if (!node.group_on[g]) continue;
      LinearConstraint c;
      c.relation = Relation::GreaterEqual;
      c.rhs = 1.0;
      for (auto k : p_.branch_groups[g]) c.terms.push_back({p_.binary_var(k), 1.0});
      lp.constraints.push_back(std::move(c));
    }
    for (auto idx : active) lp.constraints.push_back(pool_[idx]);
    return lp;
  }

  // Base rows keep their index; group rows and cuts follow in disjoint ranges.
  std::vector<std::size_t> row_keys(const Node& node, const std::vector<std::size_t>& active) const {
    std::vector<std::size_t> keys(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) keys[i] = i;
    const std::size_t group_base = rows_.size();
    for (std::size_t g = 0; g < p_.branch_groups.size(); ++g)
      if (node.group_on[g]) keys.push_back(group_base + g);
    const std::size_t cut_base = group_base + p_.branch_groups.size();
    for (auto idx : active) keys.push_back(cut_base + idx);
    return keys;
  }

  static LpBasis expand(const KeyedBasis& kb, const std::vector<std::size_t>& keys) {
    LpBasis b;
    b.columns = kb.columns;
    b.rows.reserve(keys.size());
    for (auto k : keys) {
      auto it = kb.rows.find(k);
      b.rows.push_back(it == kb.rows.end() ? BasisStatus::Basic : it->second);
    }
    return b;
  }

  static std::shared_ptr<const KeyedBasis> keyed(const LpBasis& b, const std::vector<std::size_t>& keys) {
    auto kb = std::make_shared<KeyedBasis>();
    kb->columns = b.columns;
    for (std::size_t i = 0; i < keys.size(); ++i) kb->rows.emplace(keys[i], b.rows[i]);
    return kb;
  }

  LpResult solve(const LpProblem& lp, const LpBasis* start = nullptr) {
    ++lp_count_;
    LpResult r = solve_lp(lp, {}, start);
    if (r.status == LpStatus::IterationLimit || r.status == LpStatus::Unbounded)
      throw SolverError(std::string("milp: LP relaxation ") +
                        (r.status == LpStatus::Unbounded ? "is unbounded" : "hit its iteration limit"));
    return r;
  }

  // Fix the binaries of x to their rounded values, re-optimize the continuous
  // part and accept the point if it verifies and improves the incumbent.
  // Returns false when the rounded binaries admit no feasible continuous part.
  bool try_incumbent(const std::vector<double>& x) {
    std::vector<double> bin(p_.binary_count);
    double estimate = 0.0;
    for (std::size_t k = 0; k < p_.binary_count; ++k) {
      bin[k] = x[p_.binary_var(k)] > 0.5 ? 1.0 : 0.0;
      estimate += p_.objective[p_.binary_var(k)] * bin[k];
    }
    const bool pure_binary_cost = granularity_ > 0.0;
    if (has_incumbent_ && pure_binary_cost && estimate >= incumbent_value_ - kBoundTolerance) return true;

    LpProblem lp;
    lp.objective = p_.objective;
    lp.lower = p_.continuous_lower;
    lp.upper = p_.continuous_upper;
    for (double b : bin) {
      lp.lower.push_back(b);
      lp.upper.push_back(b);
    }
    lp.constraints = rows_;
    const LpResult r = solve(lp);
    if (r.status != LpStatus::Optimal) return false;

    std::vector<double> point = r.x;
    for (std::size_t k = 0; k < p_.binary_count; ++k) point[p_.binary_var(k)] = bin[k];
    for (const auto& c : rows_)
      if (c.violation(point) > opt_.feasibility_tolerance) return false;
    double value = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) value += p_.objective[j] * point[j];
    if (has_incumbent_ && value >= incumbent_value_ - kBoundTolerance * std::max(1.0, std::abs(incumbent_value_)))
      return true;
    has_incumbent_ = true;
    incumbent_value_ = value;
    incumbent_ = std::move(point);
    return true;
  }

  void process(const Node& node, std::priority_queue<Node, std::vector<Node>, NodeOrder>& open) {
    std::vector<std::size_t> active = node.cuts;
    std::vector<std::uint8_t> in_active(pool_.size(), 0);
    for (auto i : active) in_active[i] = 1;
    LpResult res;
    std::shared_ptr<const KeyedBasis> start = node.start;
    std::vector<std::size_t> keys;
    for (int round = 0;; ++round) {
      keys = row_keys(node, active);
      if (start) {
        const LpBasis b = expand(*start, keys);
        res = solve(node_lp(node, active), &b);
      } else {
        res = solve(node_lp(node, active));
      }
      if (res.status == LpStatus::Infeasible) return;
      if (prunable(res.objective)) return;
      start = keyed(res.basis, keys);

      std::vector<std::size_t> added;
      for (std::size_t k = 0; k < pool_.size(); ++k)
        if (!in_active[k] && pool_[k].violation(res.x) > kCutViolation) added.push_back(k);
      if (added.empty() && opt_.separator && round < opt_.max_cut_rounds) {
        for (auto& c : opt_.separator(std::span<const double>(res.x))) {
          if (c.violation(res.x) <= kCutViolation) continue;
          const std::string key = cut_key(c);
          auto it = pool_index_.find(key);
          std::size_t idx;
          if (it == pool_index_.end()) {
            idx = pool_.size();
            pool_.push_back(std::move(c));
            pool_index_.emplace(key, idx);
            in_active.push_back(0);
          } else {
            idx = it->second;
          }
          if (!in_active[idx] && std::find(added.begin(), added.end(), idx) == added.end()) added.push_back(idx);
        }
      }
      if (added.empty()) break;
      for (auto k : added) {
        active.push_back(k);
        in_active[k] = 1;
      }
    }

    const double tol = opt_.integrality_tolerance;
    bool integral = true;
    for (std::size_t k = 0; k < p_.binary_count && integral; ++k) {
      const double v = res.x[p_.binary_var(k)];
      if (v > tol && v < 1.0 - tol) integral = false;
    }
    // A binary within tolerance of 0 may still carry a tiny big-M slack the
    // rounded point cannot do without; such nodes are branched exactly.
    double branch_tol = tol;
    if (integral) {
      if (try_incumbent(res.x)) return;
      branch_tol = 0.0;
    }

    // Rounding heuristic: binaries above the tolerance go to 1; if that
    // misses a needed slack, retry with every positive binary.
    for (double cutoff : {tol, 0.0}) {
      std::vector<double> up = res.x;
      for (std::size_t k = 0; k < p_.binary_count; ++k) {
        double& v = up[p_.binary_var(k)];
        v = v > cutoff ? 1.0 : 0.0;
      }
      if (try_incumbent(up)) break;
    }
    if (prunable(res.objective)) return;

    // Children inherit only the cuts that are tight at the parent optimum.
    std::vector<std::size_t> inherited;
    for (auto k : active)
      if (std::abs(pool_[k].activity(res.x) - pool_[k].rhs) <= kCutViolation) inherited.push_back(k);

    Node down;
    Node upn;
    if (!branch_group(node, res.x, down, upn, branch_tol) && !branch_binary(node, res.x, down, upn, branch_tol)) {
      if (integral) return;
      throw SolverError("milp: fractional relaxation without a branching candidate");
    }
    for (Node* child : {&down, &upn}) {
      child->bound = res.objective;
      child->id = next_id_++;
      child->cuts = inherited;
      child->start = start;
      open.push(std::move(*child));
    }
  }

  bool branch_group(const Node& node, const std::vector<double>& x, Node& off, Node& on, double tol) const {
    long best = -1;
    double best_score = 0.0;
    for (std::size_t g = 0; g < p_.branch_groups.size(); ++g) {
      if (node.group_on[g]) continue;
      bool any_one = false;
      bool all_zero = true;
      double s = 0.0;
      for (auto k : p_.branch_groups[g]) {
        if (node.fix[k] == 1) any_one = true;
        if (node.fix[k] != 0) all_zero = false;
        s += x[p_.binary_var(k)];
      }
      if (any_one || all_zero) continue;
      if (s <= tol || s >= 1.0 - tol) continue;
      const double score = std::min(s, 1.0 - s);
      if (score > best_score) {
        best_score = score;
        best = static_cast<long>(g);
      }
    }
    if (best < 0) return false;
    off = node;
    on = node;
    for (auto k : p_.branch_groups[static_cast<std::size_t>(best)]) off.fix[k] = 0;
    on.group_on[static_cast<std::size_t>(best)] = 1;
    return true;
  }

  bool branch_binary(const Node& node, const std::vector<double>& x, Node& zero, Node& one, double tol) const {
    long best = -1;
    double best_score = 0.0;
    for (std::size_t k = 0; k < p_.binary_count; ++k) {
      if (node.fix[k] >= 0) continue;
      const double v = x[p_.binary_var(k)];
      const double score = std::min(v, 1.0 - v);
      if (score > tol && score > best_score) {
        best_score = score;
        best = static_cast<long>(k);
      }
    }
    if (best < 0) return false;
    zero = node;
    one = node;
    zero.fix[static_cast<std::size_t>(best)] = 0;
    one.fix[static_cast<std::size_t>(best)] = 1;
    return true;
  }

  const MilpProblem& p_;
  const MilpOptions& opt_;
  std::vector<LinearConstraint> rows_;
  bool trivially_infeasible_ = false;
  double granularity_ = 0.0;
  std::vector<LinearConstraint> pool_;
  std::map<std::string, std::size_t> pool_index_;
  bool has_incumbent_ = false;
  double incumbent_value_ = 0.0;
  std::vector<double> incumbent_;
  long next_id_ = 0;
  long lp_count_ = 0;
};

}  // namespace

LpResult solve_lp_relaxation(const MilpProblem& problem) {
  validate(problem, MilpOptions{});
  LpProblem lp;
  lp.objective = problem.objective;
  lp.lower = problem.continuous_lower;
  lp.upper = problem.continuous_upper;
  lp.lower.resize(problem.variable_count(), 0.0);
  lp.upper.resize(problem.variable_count(), 1.0);
  for (const auto& c : problem.constraints)
    if (!c.terms.empty()) lp.constraints.push_back(c);
  return solve_lp(lp);
}

MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  validate(problem, options);
  BranchAndBound bb(problem, options);
  return bb.run();
}

}  // namespace gridrisk::milp
