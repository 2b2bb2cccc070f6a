#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace gridrisk::milp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  std::size_t index;
  double coeff;
};

/// Σ coeff·x[index] (relation) rhs.
struct LinearConstraint {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;

  double activity(const std::vector<double>& x) const;
  /// Amount by which x violates the constraint (0 when satisfied).
  double violation(const std::vector<double>& x) const;
};

/// min objectiveᵀx s.t. constraints, lower ≤ x ≤ upper (bounds may be ±inf).
struct LpProblem {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LinearConstraint> constraints;

  std::size_t variable_count() const { return objective.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

enum class BasisStatus : std::uint8_t { Basic, AtLower, AtUpper, Zero };

/// Simplex basis: one status per variable and one per constraint (the
/// constraint's slack). Nonbasic free variables sit at Zero.
struct LpBasis {
  std::vector<BasisStatus> columns;
  std::vector<BasisStatus> rows;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  long iterations = 0;
  LpBasis basis;  // final basis, filled when optimal
};

struct LpOptions {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 30;
  long iteration_limit = 0;  // 0: derived from problem size
};

/// Two-phase bounded-variable primal simplex on a dense tableau.
///
/// Pricing is Dantzig's rule; after a run of degenerate pivots it switches to
/// Bland's rule (lowest eligible index, lowest leaving index on ratio ties)
/// until the objective strictly improves, which rules out cycling.
///
/// With `start`, the solve begins from that basis: the dual simplex restores
/// primal feasibility when bounds or rows changed, then the primal simplex
/// finishes. A start that is singular, mis-sized or neither primal nor dual
/// feasible falls back to a cold start.
LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {}, const LpBasis* start = nullptr);

}  // namespace gridrisk::milp
