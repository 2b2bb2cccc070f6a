#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gridrisk/lp.hpp"

namespace gridrisk::milp {

/// Mixed 0/1 program. Variables are laid out as
/// [continuous_count continuous | binary_count binaries].
struct MilpProblem {
  std::size_t continuous_count = 0;
  std::vector<double> continuous_lower;
  std::vector<double> continuous_upper;
  std::size_t binary_count = 0;
  std::vector<double> objective;  // one entry per variable
  std::vector<LinearConstraint> constraints;
  /// Optional sets of binaries (indices relative to the binary block) that may
  /// be branched on jointly: Σ = 0 in one child, Σ ≥ 1 in the other.
  std::vector<std::vector<std::size_t>> branch_groups;

  std::size_t variable_count() const { return continuous_count + binary_count; }
  std::size_t binary_var(std::size_t k) const { return continuous_count + k; }
};

enum class MilpStatus { Optimal, Infeasible, IterationLimit };

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  double objective_value = 0.0;
  std::vector<double> continuous_values;
  std::vector<int> binary_values;
  long node_count = 0;
  long lp_count = 0;
  std::size_t cut_count = 0;
};

/// Given a relaxation point (all variables), return valid inequalities it
/// violates. Cuts must hold for every integer-feasible point.
using CutSeparator = std::function<std::vector<LinearConstraint>(std::span<const double>)>;

struct MilpOptions {
  std::size_t max_binaries = 128;
  long node_limit = 200000;
  double integrality_tolerance = 1e-9;
  double feasibility_tolerance = 1e-7;
  int max_cut_rounds = 40;
  CutSeparator separator;
};

/// LP relaxation with binaries relaxed to [0, 1].
LpResult solve_lp_relaxation(const MilpProblem& problem);

/// Best-first branch and bound. Branching prefers the most fractional group,
/// then the most fractional binary; ties go to the lowest index, so results
/// are deterministic. Throws InputError for malformed problems and
/// SolverError if an LP fails.
MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options = {});

}  // namespace gridrisk::milp
