#pragma once

// Helpers and independent oracles for the tests. Nothing here calls the
// library's linear algebra or solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridrisk/lp.hpp"
#include "gridrisk/milp.hpp"
#include "gridrisk/network_model.hpp"

namespace testing {

using Dense = std::vector<std::vector<double>>;

inline std::string case_path(const std::string& name) { return std::string(GRIDRISK_CASE_DIR) + "/" + name; }

inline gridrisk::GridModel load_model(const std::string& name) {
  return gridrisk::build_model(gridrisk::load_case_file(case_path(name + ".json")));
}

inline Dense to_dense(const gridrisk::Matrix& A) {
  Dense out(static_cast<std::size_t>(A.rows()), std::vector<double>(static_cast<std::size_t>(A.cols())));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = A(i, j);
  return out;
}

inline Dense multiply(const Dense& A, const Dense& B) {
  const std::size_t n = A.size(), k = B.size(), m = B.empty() ? 0 : B[0].size();
  Dense C(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < m; ++j) C[i][j] += A[i][p] * B[p][j];
  return C;
}

inline Dense transpose(const Dense& A) {
  if (A.empty()) return {};
  Dense T(A[0].size(), std::vector<double>(A.size()));
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < A[0].size(); ++j) T[j][i] = A[i][j];
  return T;
}

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> naive_solve(Dense A, std::vector<double> b, double tol = 1e-12) {
  const std::size_t n = A.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) <= tol) return std::nullopt;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * x[c];
    x[i] = s / A[i][i];
  }
  return x;
}

// Row echelon rank with a tolerance relative to the largest entry.
inline std::size_t naive_rank(Dense A, double rel_tol = 1e-8) {
  if (A.empty()) return 0;
  double scale = 0.0;
  for (const auto& row : A)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0;
  const std::size_t rows = A.size(), cols = A[0].size();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t piv = rank;
    for (std::size_t r = rank + 1; r < rows; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) <= rel_tol * scale) continue;
    std::swap(A[piv], A[rank]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const double f = A[r][col] / A[rank][col];
      for (std::size_t c = col; c < cols; ++c) A[r][c] -= f * A[rank][c];
    }
    ++rank;
  }
  return rank;
}

// WLS estimate from the normal equations, solved by elimination.
inline std::vector<double> naive_wls(const Dense& H, const std::vector<double>& sigma, const std::vector<double>& z) {
  const std::size_t m = H.size(), n = H[0].size();
  Dense G(n, std::vector<double>(n, 0.0));
  std::vector<double> rhs(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    for (std::size_t a = 0; a < n; ++a) {
      rhs[a] += H[i][a] * w * z[i];
      for (std::size_t b = 0; b < n; ++b) G[a][b] += H[i][a] * w * H[i][b];
    }
  }
  return *naive_solve(G, rhs);
}

struct OracleLp {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Vertex enumeration: every choice of n active hyperplanes among the rows
// and the finite bounds. Requires every variable to be bounded.
inline OracleLp vertex_oracle(const gridrisk::milp::LpProblem& p, double tol = 1e-9) {
  using gridrisk::milp::Relation;
  const std::size_t n = p.variable_count();
  struct Plane {
    std::vector<double> a;
    double rhs;
    bool mandatory;
  };
  std::vector<Plane> planes;
  for (const auto& c : p.constraints) {
    Plane pl{std::vector<double>(n, 0.0), c.rhs, c.relation == Relation::Equal};
    for (const auto& t : c.terms) pl.a[t.index] += t.coeff;
    planes.push_back(pl);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (double bound : {p.lower[j], p.upper[j]}) {
      Plane pl{std::vector<double>(n, 0.0), bound, false};
      pl.a[j] = 1.0;
      planes.push_back(pl);
    }
  }
  auto feasible = [&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol) return false;
    for (const auto& c : p.constraints) {
      double s = 0.0;
      for (const auto& t : c.terms) s += t.coeff * x[t.index];
      if (c.relation == Relation::LessEqual && s > c.rhs + tol) return false;
      if (c.relation == Relation::GreaterEqual && s < c.rhs - tol) return false;
      if (c.relation == Relation::Equal && std::abs(s - c.rhs) > tol) return false;
    }
    return true;
  };
  OracleLp best;
  // Iterate over all n-subsets of the planes.
  std::vector<bool> mask(planes.size(), false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(std::min(n, planes.size())), true);
  if (n == 0 || planes.size() < n) return best;
  do {
    Dense A;
    std::vector<double> b;
    bool has_all_mandatory = true;
    for (std::size_t k = 0; k < planes.size(); ++k) {
      if (mask[k]) {
        A.push_back(planes[k].a);
        b.push_back(planes[k].rhs);
      } else if (planes[k].mandatory) {
        has_all_mandatory = false;
      }
    }
    if (!has_all_mandatory) continue;
    auto x = naive_solve(A, b, 1e-10);
    if (!x || !feasible(*x)) continue;
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += p.objective[j] * (*x)[j];
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.x = *x;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

// Every binary assignment, continuous part by vertex enumeration.
inline OracleLp enumerate_milp(const gridrisk::milp::MilpProblem& p) {
  OracleLp best;
  const std::size_t k = p.binary_count;
  for (std::size_t bits = 0; bits < (std::size_t{1} << k); ++bits) {
    gridrisk::milp::LpProblem lp;
    lp.objective = p.objective;
    lp.lower = p.continuous_lower;
    lp.upper = p.continuous_upper;
    for (std::size_t b = 0; b < k; ++b) {
      const double v = (bits >> b) & 1u ? 1.0 : 0.0;
      lp.lower.push_back(v);
      lp.upper.push_back(v);
    }
    lp.constraints = p.constraints;
    OracleLp r;
    if (p.continuous_count == 0) {
      std::vector<double> x(lp.lower);
      r.feasible = true;
      for (const auto& c : lp.constraints) {
        if (c.violation(x) > 1e-9) r.feasible = false;
      }
      r.x = x;
      for (std::size_t j = 0; j < x.size(); ++j) r.objective += p.objective[j] * x[j];
    } else {
      // Fixed binaries become equality planes; drop them to keep the
      // enumeration small.
      gridrisk::milp::LpProblem reduced;
      const std::size_t nc = p.continuous_count;
      reduced.objective.assign(p.objective.begin(), p.objective.begin() + static_cast<std::ptrdiff_t>(nc));
      reduced.lower = p.continuous_lower;
      reduced.upper = p.continuous_upper;
      double fixed_cost = 0.0;
      for (std::size_t b = 0; b < k; ++b) fixed_cost += p.objective[nc + b] * lp.lower[nc + b];
      for (const auto& c : lp.constraints) {
        gridrisk::milp::LinearConstraint rc;
        rc.relation = c.relation;
        rc.rhs = c.rhs;
        for (const auto& t : c.terms) {
          if (t.index < nc) rc.terms.push_back(t);
          else rc.rhs -= t.coeff * lp.lower[t.index];
        }
        reduced.constraints.push_back(rc);
      }
      r = vertex_oracle(reduced);
      r.objective += fixed_cost;
    }
    if (r.feasible && (!best.feasible || r.objective < best.objective - 1e-12)) best = r;
  }
  return best;
}

// Smallest S ∋ j such that the rows outside S leave some direction c with
// H(j,:)c ≠ 0: rank([H_out; H_j]) > rank(H_out).
inline std::size_t oracle_index(const gridrisk::Matrix& H, std::size_t j) {
  const auto rows = to_dense(H);
  const std::size_t m = rows.size();
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < m; ++i)
    if (i != j) others.push_back(i);
  for (std::size_t extra = 0; extra < m; ++extra) {
    std::vector<bool> pick(others.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(extra), true);
    do {
      Dense out;
      for (std::size_t k = 0; k < others.size(); ++k)
        if (!pick[k]) out.push_back(rows[others[k]]);
      const std::size_t base = naive_rank(out);
      out.push_back(rows[j]);
      if (naive_rank(out) > base) return extra + 1;
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return m;
}

}  // namespace testing
