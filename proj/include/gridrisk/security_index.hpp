#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gridrisk/common.hpp"

namespace gridrisk {

/// Target and costs for one index program. target is 0-based.
struct IndexQuery {
  std::size_t target = 0;
  double mu = 0.1;
  double cost_integrity = 1.0;
  double cost_availability = 1.0;
  double big_m = 0.0;  // 0 selects 1e4·|mu|
};

struct SecurityIndexResult {
  double objective = 0.0;
  std::vector<std::size_t> integrity_set;     // rows with w = 1 (0-based, ascending)
  std::vector<std::size_t> availability_set;  // rows with d = 1
  Vector certificate_c;
  bool verified_stealth = false;
  double big_m = 0.0;  // M of the accepted solve
  long node_count = 0;

  std::size_t k_a() const { return integrity_set.size(); }
  std::size_t k_d() const { return availability_set.size(); }
  /// Union of both sets, ascending.
  std::vector<std::size_t> tuple() const;
};

/// α_j: min Σy s.t. |H(i,:)c| ≤ M·y(i), H(j,:)c = μ.
SecurityIndexResult fdi_index(const Matrix& H, const IndexQuery& query);

/// β_j: min Σw + Σd s.t. |H(i,:)c| ≤ M·(w(i) + d(i)), H(j,:)c = μ.
/// Costs in the query are ignored (both 1).
SecurityIndexResult combined_index(const Matrix& H, const IndexQuery& query);

/// γ_j: min C_I·Σw + C_A·Σd over the combined program, or C_I·Σw with d ≡ 0
/// when allow_availability is false.
SecurityIndexResult cost_weighted_index(const Matrix& H, const IndexQuery& query,
                                        bool allow_availability = true);

struct CriticalTuple {
  std::size_t cardinality = 0;
  std::vector<std::size_t> rows;  // ascending, contains the target
  long subsets_examined = 0;
};

/// Smallest S ∋ j such that some c has H(j,:)c ≠ 0 and H(i,:)c = 0 off S,
/// found by enumerating supports in increasing size with rank tests.
/// Requires m ≤ 25 unless max_cardinality caps the search.
CriticalTuple brute_force_index(const Matrix& H, std::size_t target, std::size_t max_cardinality = 0);

/// All minimal row sets whose removal drops the rank of H (m ≤ 20).
std::vector<std::vector<std::size_t>> critical_tuples(const Matrix& H);

struct InvarianceReport {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_perturbed = 0.0;
  double beta_perturbed = 0.0;
  bool indices_equal = false;
  std::vector<std::size_t> tuple;            // from the true model
  std::vector<std::size_t> tuple_perturbed;  // from the perturbed model
  bool same_tuple = false;
  /// Set when the tuple families were enumerated (small systems only).
  std::optional<bool> families_equal;
};

/// Computes α, β on H and on the perturbed H̃ for target j and compares them;
/// on systems with m ≤ 20 also compares the critical-tuple families.
InvarianceReport verify_perturbation_invariance(const Matrix& H, const Matrix& H_perturbed, std::size_t target,
                               double mu = 0.1);

struct IndexRow {
  std::size_t j = 0;  // 0-based
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_fdi = 0.0;
  double gamma_combined = 0.0;
  std::size_t k_a = 0;
  std::size_t k_d = 0;
  std::vector<std::size_t> integrity_set;
  std::vector<std::size_t> availability_set;
};

/// Every index for every measurement. Sets and (k_a, k_d) come from the
/// cost-weighted combined program. Rows come back in measurement order.
std::vector<IndexRow> index_sweep(const Matrix& H, double mu, double cost_integrity,
                                  double cost_availability);

/// Minimum-norm c with H(i,:)c = 0 for every row outside `tuple` and
/// H(target,:)c = mu. Throws SolverError when the tuple admits no such c.
Vector tuple_certificate(const Matrix& H, const std::vector<std::size_t>& tuple, std::size_t target, double mu);

/// CSV with header j,alpha,beta,gamma_fdi,gamma_combined,k_a,k_d,integrity_set,availability_set;
/// measurement indices 1-based, sets joined with ';'.
std::string index_table_csv(const std::vector<IndexRow>& rows);

}  // namespace gridrisk
