#include "gridrisk/security_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gridrisk/estimator.hpp"
#include "gridrisk/format.hpp"
#include "gridrisk/milp.hpp"
#include "gridrisk/network_model.hpp"
#include "gridrisk/parallel.hpp"

namespace gridrisk {

namespace {

using milp::LinearConstraint;
using milp::Relation;

constexpr double kSpanTol = 1e-9;
constexpr int kMaxBigMRetries = 3;

struct Program {
  bool availability = false;
  double cost_integrity = 1.0;
  double cost_availability = 1.0;
};

void check_query(const Matrix& H, const IndexQuery& q, const Program& prog) {
  if (H.rows() == 0 || H.cols() == 0) throw InputError("index: empty model matrix");
  if (q.target >= static_cast<std::size_t>(H.rows()))
    throw InputError("index: target " + std::to_string(q.target + 1) + " outside 1.." + std::to_string(H.rows()));
  if (!(q.mu != 0.0) || !std::isfinite(q.mu)) throw InputError("index: mu must be finite and nonzero");
  if (q.big_m < 0.0 || !std::isfinite(q.big_m)) throw InputError("index: big_m must be positive");
  if (!(prog.cost_integrity >= 0.0) || !(prog.cost_availability >= 0.0))
    throw InputError("index: costs must be non-negative");
}

// Greedy circuit search for row j of H: rows are offered in the given order
// and kept while linearly independent, until H(j,:) lies in their span. The
// rows with nonzero coefficients in the resulting combination, together with
// j, form a circuit. Every stealth attack on j must touch one of them.
class CircuitFinder {
 public:
  CircuitFinder(const Matrix& H, std::size_t j) : H_(H), j_(j) {}

  std::optional<std::vector<std::size_t>> find(const std::vector<std::size_t>& order,
                                               std::optional<std::size_t> banned) const {
    const auto n = H_.cols();
    const Vector hj = H_.row(static_cast<Eigen::Index>(j_)).transpose();
    const double hj_norm = hj.norm();
    if (hj_norm == 0.0) return std::nullopt;
    Matrix Q(n, n);
    Eigen::Index k = 0;
    std::vector<std::size_t> chosen;
    bool spanned = false;
    for (std::size_t i : order) {
      if (i == j_ || (banned && *banned == i)) continue;
      const Vector v = H_.row(static_cast<Eigen::Index>(i)).transpose();
      const double vn = v.norm();
      if (vn == 0.0) continue;
      Vector r = v;
      if (k > 0) {
        r -= Q.leftCols(k) * (Q.leftCols(k).transpose() * r);
        r -= Q.leftCols(k) * (Q.leftCols(k).transpose() * r);
      }
      const double rn = r.norm();
      if (rn <= kSpanTol * vn) continue;
      Q.col(k++) = r / rn;
      chosen.push_back(i);
      Vector res = hj - Q.leftCols(k) * (Q.leftCols(k).transpose() * hj);
      if (res.norm() <= kSpanTol * hj_norm) {
        spanned = true;
        break;
      }
      if (k == n) break;
    }
    if (!spanned) return std::nullopt;

    Matrix A(n, static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t t = 0; t < chosen.size(); ++t)
      A.col(static_cast<Eigen::Index>(t)) = H_.row(static_cast<Eigen::Index>(chosen[t])).transpose();
    const Vector lambda = A.colPivHouseholderQr().solve(hj);
    const double big = lambda.cwiseAbs().maxCoeff();
    std::vector<std::size_t> circuit;
    for (std::size_t t = 0; t < chosen.size(); ++t)
      if (std::abs(lambda(static_cast<Eigen::Index>(t))) > 1e-9 * big) circuit.push_back(chosen[t]);
    std::sort(circuit.begin(), circuit.end());
    return circuit;
  }

 private:
  const Matrix& H_;
  std::size_t j_;
};

// Variables: c (n, free) | w (m) | d (m, combined programs only).
milp::MilpProblem build_program(const Matrix& H, const IndexQuery& q, const Program& prog, double M) {
  const auto m = static_cast<std::size_t>(H.rows());
  const auto n = static_cast<std::size_t>(H.cols());
  milp::MilpProblem p;
  p.continuous_count = n;
  p.continuous_lower.assign(n, -milp::kInfinity);
  p.continuous_upper.assign(n, milp::kInfinity);
  p.binary_count = prog.availability ? 2 * m : m;
  p.objective.assign(p.variable_count(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    p.objective[n + i] = prog.cost_integrity;
    if (prog.availability) p.objective[n + m + i] = prog.cost_availability;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (double sign : {1.0, -1.0}) {
      LinearConstraint c;
      for (std::size_t k = 0; k < n; ++k) {
        const double h = H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (h != 0.0) c.terms.push_back({k, sign * h});
      }
      c.terms.push_back({n + i, -M});
      if (prog.availability) c.terms.push_back({n + m + i, -M});
      c.relation = Relation::LessEqual;
      c.rhs = 0.0;
      p.constraints.push_back(std::move(c));
    }
  }
  LinearConstraint target;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = H(static_cast<Eigen::Index>(q.target), static_cast<Eigen::Index>(k));
    if (h != 0.0) target.terms.push_back({k, h});
  }
  // Supports do not depend on μ, so the program is solved for a unit target
  // and μ only enters through the certificate. Scaled queries then share one LP.
  target.relation = Relation::Equal;
  target.rhs = 1.0;
  p.constraints.push_back(std::move(target));
  if (prog.availability) {
    // The target row carries the injected value, so it cannot be the one removed.
    p.constraints.push_back({{{n + m + q.target, 1.0}}, Relation::LessEqual, 0.0});
    for (std::size_t i = 0; i < m; ++i) p.branch_groups.push_back({i, m + i});
  }
  return p;
}

milp::CutSeparator make_separator(const Matrix& H, std::size_t j, bool availability) {
  const auto m = static_cast<std::size_t>(H.rows());
  const auto n = static_cast<std::size_t>(H.cols());
  return [&H, j, availability, m, n](std::span<const double> x) {
    auto weight = [&](std::size_t i) { return x[n + i] + (availability ? x[n + m + i] : 0.0); };
    auto cut_for = [&](const std::vector<std::size_t>& rows) {
      LinearConstraint c;
      for (auto i : rows) {
        c.terms.push_back({n + i, 1.0});
        if (availability) c.terms.push_back({n + m + i, 1.0});
      }
      c.relation = Relation::GreaterEqual;
      c.rhs = 1.0;
      return c;
    };
    std::vector<LinearConstraint> cuts;
    cuts.push_back(cut_for({j}));

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weight(a) < weight(b); });
    const CircuitFinder finder(H, j);
    const auto base = finder.find(order, std::nullopt);
    if (!base) return cuts;
    cuts.push_back(cut_for(*base));
    for (auto banned : *base) {
      const auto alt = finder.find(order, banned);
      if (alt) cuts.push_back(cut_for(*alt));
    }
    return cuts;
  };
}

// Minimum-norm c with H(i,:)c = 0 on every row outside `support` and
// H(j,:)c = μ. Empty optional when no such c exists.
std::optional<Vector> certificate_for(const Matrix& H, std::size_t j, double mu,
                                      const std::vector<std::uint8_t>& in_support) {
  const auto n = H.cols();
  std::vector<Eigen::Index> zero_rows;
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    if (!in_support[static_cast<std::size_t>(i)]) zero_rows.push_back(i);
  Matrix N;
  if (zero_rows.empty()) {
    N = Matrix::Identity(n, n);
  } else {
    Matrix Z(static_cast<Eigen::Index>(zero_rows.size()), n);
    for (std::size_t r = 0; r < zero_rows.size(); ++r) Z.row(static_cast<Eigen::Index>(r)) = H.row(zero_rows[r]);
    Eigen::JacobiSVD<Matrix> svd(Z, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > 1e-9 * std::max(smax, 1.0)) ++rank;
    if (rank == n) return std::nullopt;
    N = svd.matrixV().rightCols(n - rank);
  }
  const Eigen::RowVectorXd g = H.row(static_cast<Eigen::Index>(j)) * N;
  const double gn2 = g.squaredNorm();
  if (gn2 <= 1e-18 * std::max(1.0, H.row(static_cast<Eigen::Index>(j)).squaredNorm())) return std::nullopt;
  return Vector(N * (g.transpose() * (mu / gn2)));
}

bool stealth_holds(const Matrix& H, const IndexQuery& q, const SecurityIndexResult& r) {
  const Vector hc = H * r.certificate_c;
  if (std::abs(hc(static_cast<Eigen::Index>(q.target)) - q.mu) > 1e-7 * std::max(1.0, std::abs(q.mu))) return false;
  AvailabilityMask d = no_removal(static_cast<std::size_t>(H.rows()));
  std::vector<std::uint8_t> listed(d.size(), 0);
  for (auto i : r.availability_set) d[i] = listed[i] = 1;
  for (auto i : r.integrity_set) listed[i] = 1;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!listed[i] && std::abs(hc(static_cast<Eigen::Index>(i))) > 1e-6 * r.big_m) return false;
  // a = H_d c must leave no residual in the reduced model.
  try {
    const auto gains = compute_reduced_gains(H, Vector::Ones(H.rows()), d);
    const Vector a = mask_rows(H, d) * r.certificate_c;
    const double lambda = (gains.S * a).squaredNorm();
    return lambda <= 1e-12 * std::max(1.0, a.squaredNorm());
  } catch (const UnobservableError&) {
    return false;
  }
}

SecurityIndexResult solve_index(const Matrix& H, const IndexQuery& q, const Program& prog) {
  check_query(H, q, prog);
  const auto m = static_cast<std::size_t>(H.rows());
  const auto n = static_cast<std::size_t>(H.cols());
  double M = q.big_m > 0.0 ? q.big_m : 1e4 * std::abs(q.mu);

  for (int attempt = 0; attempt <= kMaxBigMRetries; ++attempt, M *= 10.0) {
    const auto problem = build_program(H, q, prog, M / std::abs(q.mu));
    milp::MilpOptions opt;
    opt.max_binaries = std::max<std::size_t>(opt.max_binaries, problem.binary_count);
    opt.separator = make_separator(H, q.target, prog.availability);
    const auto sol = milp::solve_milp(problem, opt);
    if (sol.status == milp::MilpStatus::Infeasible)
      throw SolverError("index: program for measurement " + std::to_string(q.target + 1) +
                        " is infeasible (is the model observable?)");
    if (sol.status != milp::MilpStatus::Optimal)
      throw SolverError("index: node limit reached for measurement " + std::to_string(q.target + 1));

    std::vector<std::uint8_t> w(m, 0), d(m, 0), support(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = static_cast<std::uint8_t>(sol.binary_values[i]);
      if (prog.availability) d[i] = static_cast<std::uint8_t>(sol.binary_values[m + i]);
      support[i] = w[i] || d[i];
    }
    const auto c = certificate_for(H, q.target, q.mu, support);
    if (!c) throw SolverError("index: optimal support admits no certificate");
    const Vector hc = H * *c;
    if (hc.cwiseAbs().maxCoeff() > 0.99 * M) continue;  // M too small to be trusted

    SecurityIndexResult r;
    r.big_m = M;
    r.node_count = sol.node_count;
    r.certificate_c = *c;
    const double thresh = 1e-6 * M;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(hc(static_cast<Eigen::Index>(i))) <= thresh) continue;
      if (w[i]) r.integrity_set.push_back(i);  // overlap counts as integrity only
      else if (d[i]) r.availability_set.push_back(i);
    }
    r.objective = prog.cost_integrity * static_cast<double>(r.k_a()) +
                  prog.cost_availability * static_cast<double>(r.k_d());
    if (r.objective > sol.objective_value + 1e-6)
      throw SolverError("index: post-processed sets cost more than the optimum");
    r.verified_stealth = stealth_holds(H, q, r);
    (void)n;
    return r;
  }
  throw SolverError("index: big-M guard still active after " + std::to_string(kMaxBigMRetries) + " re-solves");
}

template <class F>
void for_each_subset(std::size_t m, std::size_t k, F&& f) {
  // Lexicographic k-combinations of 0..m-1; f returns true to stop.
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k > m) return;
  while (true) {
    if (f(idx)) return;
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == m - k + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t t = pos; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
}

Matrix rows_except(const Matrix& H, const std::vector<std::uint8_t>& drop) {
  Eigen::Index keep = 0;
  for (auto v : drop) keep += v ? 0 : 1;
  Matrix out(keep, H.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    if (!drop[static_cast<std::size_t>(i)]) out.row(r++) = H.row(i);
  return out;
}

std::size_t rank_of(const Matrix& A) { return A.rows() == 0 ? 0 : numerical_rank(A); }

}  // namespace

std::vector<std::size_t> SecurityIndexResult::tuple() const {
  std::vector<std::size_t> t = integrity_set;
  t.insert(t.end(), availability_set.begin(), availability_set.end());
  std::sort(t.begin(), t.end());
  return t;
}

Vector tuple_certificate(const Matrix& H, const std::vector<std::size_t>& tuple, std::size_t target, double mu) {
  const auto m = static_cast<std::size_t>(H.rows());
  if (target >= m) throw InputError("certificate: target outside the measurement range");
  std::vector<std::uint8_t> in(m, 0);
  for (auto i : tuple) {
    if (i >= m) throw InputError("certificate: tuple row outside the measurement range");
    in[i] = 1;
  }
  if (!in[target]) throw InputError("certificate: tuple must contain the target");
  auto c = certificate_for(H, target, mu, in);
  if (!c) throw SolverError("certificate: no stealth direction is supported on this tuple");
  return *c;
}

SecurityIndexResult fdi_index(const Matrix& H, const IndexQuery& query) {
  return solve_index(H, query, {false, 1.0, 1.0});
}

SecurityIndexResult combined_index(const Matrix& H, const IndexQuery& query) {
  return solve_index(H, query, {true, 1.0, 1.0});
}

SecurityIndexResult cost_weighted_index(const Matrix& H, const IndexQuery& query, bool allow_availability) {
  return solve_index(H, query, {allow_availability, query.cost_integrity, query.cost_availability});
}

CriticalTuple brute_force_index(const Matrix& H, std::size_t target, std::size_t max_cardinality) {
  const auto m = static_cast<std::size_t>(H.rows());
  if (target >= m) throw InputError("brute force: target outside the measurement range");
  if (m > 25 && max_cardinality == 0)
    throw InputError("brute force: " + std::to_string(m) + " measurements needs a cardinality cap");
  const std::size_t cap = max_cardinality == 0 ? m : std::min(max_cardinality, m);

  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < m; ++i)
    if (i != target) others.push_back(i);

  CriticalTuple out;
  for (std::size_t k = 1; k <= cap; ++k) {
    bool found = false;
    for_each_subset(others.size(), k - 1, [&](const std::vector<std::size_t>& pick) {
      ++out.subsets_examined;
      std::vector<std::uint8_t> drop(m, 0);
      drop[target] = 1;
      for (auto p : pick) drop[others[p]] = 1;
      // Feasible iff H(j,:) is outside the row space of the untouched rows.
      const Matrix rest = rows_except(H, drop);
      Matrix with_target(rest.rows() + 1, H.cols());
      with_target << rest, H.row(static_cast<Eigen::Index>(target));
      if (rank_of(with_target) > rank_of(rest)) {
        out.cardinality = k;
        out.rows.clear();
        for (std::size_t i = 0; i < m; ++i)
          if (drop[i]) out.rows.push_back(i);
        found = true;
        return true;
      }
      return false;
    });
    if (found) return out;
  }
  throw SolverError("brute force: enumeration cap of " + std::to_string(cap) + " exceeded");
}

std::vector<std::vector<std::size_t>> critical_tuples(const Matrix& H) {
  const auto m = static_cast<std::size_t>(H.rows());
  if (m > 20) throw InputError("critical tuples: enumeration limited to 20 measurements");
  const std::size_t full = rank_of(H);
  std::vector<std::vector<std::size_t>> family;
  for (std::size_t k = 1; k <= m; ++k) {
    for_each_subset(m, k, [&](const std::vector<std::size_t>& pick) {
      for (const auto& f : family)
        if (std::includes(pick.begin(), pick.end(), f.begin(), f.end())) return false;
      std::vector<std::uint8_t> drop(m, 0);
      for (auto p : pick) drop[p] = 1;
      if (rank_of(rows_except(H, drop)) < full) family.push_back(pick);
      return false;
    });
  }
  std::sort(family.begin(), family.end());
  return family;
}

InvarianceReport verify_perturbation_invariance(const Matrix& H, const Matrix& H_perturbed, std::size_t target, double mu) {
  if (H.rows() != H_perturbed.rows() || H.cols() != H_perturbed.cols())
    throw DimensionError("perturbation check: perturbed model has a different shape");
  IndexQuery q;
  q.target = target;
  q.mu = mu;
  const auto a = fdi_index(H, q);
  const auto b = combined_index(H, q);
  const auto at = fdi_index(H_perturbed, q);
  const auto bt = combined_index(H_perturbed, q);
  InvarianceReport rep;
  rep.alpha = a.objective;
  rep.beta = b.objective;
  rep.alpha_perturbed = at.objective;
  rep.beta_perturbed = bt.objective;
  rep.indices_equal = a.objective == b.objective && b.objective == at.objective && at.objective == bt.objective;
  rep.tuple = b.tuple();
  rep.tuple_perturbed = bt.tuple();
  rep.same_tuple = rep.tuple == rep.tuple_perturbed;
  if (H.rows() <= 20) rep.families_equal = critical_tuples(H) == critical_tuples(H_perturbed);
  return rep;
}

std::vector<IndexRow> index_sweep(const Matrix& H, double mu, double cost_integrity, double cost_availability) {
  const auto m = static_cast<std::size_t>(H.rows());
  std::vector<IndexRow> rows(m);
  parallel_for(m, [&](std::size_t j) {
    IndexQuery q;
    q.target = j;
    q.mu = mu;
    q.cost_integrity = cost_integrity;
    q.cost_availability = cost_availability;
    const auto a = fdi_index(H, q);
    const auto b = combined_index(H, q);
    const auto g = cost_weighted_index(H, q, true);
    IndexRow& r = rows[j];
    r.j = j;
    r.alpha = a.objective;
    r.beta = b.objective;
    // With d ≡ 0 every attacked row costs C_I, so the FDI program is α scaled.
    r.gamma_fdi = cost_integrity * a.objective;
    r.gamma_combined = g.objective;
    r.k_a = g.k_a();
    r.k_d = g.k_d();
    r.integrity_set = g.integrity_set;
    r.availability_set = g.availability_set;
  });
  return rows;
}

std::string index_table_csv(const std::vector<IndexRow>& rows) {
  std::ostringstream out;
  out << "j,alpha,beta,gamma_fdi,gamma_combined,k_a,k_d,integrity_set,availability_set\n";
  for (const auto& r : rows) {
    out << r.j + 1 << ',' << format_number(r.alpha) << ',' << format_number(r.beta) << ','
        << format_number(r.gamma_fdi) << ',' << format_number(r.gamma_combined) << ',' << r.k_a << ','
        << r.k_d << ',' << format_index_list(r.integrity_set) << ',' << format_index_list(r.availability_set)
        << '\n';
  }
  return out.str();
}

}  // namespace gridrisk
