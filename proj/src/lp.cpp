#include "gridrisk/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gridrisk::milp {

double LinearConstraint::activity(const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coeff * x[t.index];
  return s;
}

double LinearConstraint::violation(const std::vector<double>& x) const {
  const double lhs = activity(x);
  switch (relation) {
    case Relation::LessEqual: return std::max(0.0, lhs - rhs);
    case Relation::GreaterEqual: return std::max(0.0, rhs - lhs);
    case Relation::Equal: return std::abs(lhs - rhs);
  }
  return 0.0;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr long kReinvertInterval = 100;

enum class Phase { One, Two };

// Column layout: [structurals | one logical per row | artificials].
// Every row is stored as a ≤ or = row (≥ rows are negated on entry), so the
// logical column of row i is +e_i and its tableau column is column i of B⁻¹.
class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& o) : opt_(o) {
    n_ = p.variable_count();
    rows_ = p.constraints.size();
    if (p.lower.size() != n_ || p.upper.size() != n_)
      throw std::invalid_argument("lp: bound vectors do not match objective length");
    for (std::size_t j = 0; j < n_; ++j)
      if (p.lower[j] > p.upper[j]) infeasible_bounds_ = true;

    A_ = RowMatrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(n_));
    b_.resize(rows_);
    equality_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto& c = p.constraints[i];
      const double sign = c.relation == Relation::GreaterEqual ? -1.0 : 1.0;
      for (const auto& t : c.terms) {
        if (t.index >= n_) throw std::invalid_argument("lp: constraint references unknown variable");
        A_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.index)) += sign * t.coeff;
      }
      b_[i] = sign * c.rhs;
      equality_[i] = c.relation == Relation::Equal;
    }
    cost_ = p.objective;
    lower_ = p.lower;
    upper_ = p.upper;
  }

  // Solve from a given basis; nullopt asks the caller for a cold start.
  std::optional<LpResult> run_warm(const LpBasis& start) {
    LpResult out;
    if (infeasible_bounds_) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    if (start.columns.size() != n_ || start.rows.size() != rows_) return std::nullopt;
    width_ = n_ + rows_;
    artificial_count_ = 0;
    artificial_open_.clear();
    value_.assign(width_, 0.0);
    basis_.clear();
    in_basis_.assign(width_, -1);
    for (std::size_t c = 0; c < width_; ++c) {
      const BasisStatus st = c < n_ ? start.columns[c] : start.rows[c - n_];
      if (st == BasisStatus::Basic) {
        if (basis_.size() == rows_) return std::nullopt;
        in_basis_[c] = static_cast<long>(basis_.size());
        basis_.push_back(c);
        continue;
      }
      const double lo = col_lower(c);
      const double hi = col_upper(c);
      double v = 0.0;
      if (st == BasisStatus::AtLower) v = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
      else if (st == BasisStatus::AtUpper) v = std::isfinite(hi) ? hi : (std::isfinite(lo) ? lo : 0.0);
      else v = std::clamp(0.0, lo, hi);
      value_[c] = v;
    }
    if (basis_.size() != rows_) return std::nullopt;
    original_ = RowMatrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(width_));
    original_.leftCols(static_cast<Eigen::Index>(n_)) = A_;
    original_.rightCols(static_cast<Eigen::Index>(rows_)).setIdentity();
    beta_.assign(rows_, 0.0);
    limit_ = opt_.iteration_limit > 0 ? opt_.iteration_limit
                                      : static_cast<long>(50 * (rows_ + width_) + 1000);
    phase_ = Phase::Two;
    phase_cost_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) phase_cost_[j] = cost_[j];
    if (!reinvert()) return std::nullopt;

    bool primal_ok = true;
    for (std::size_t r = 0; r < rows_ && primal_ok; ++r) primal_ok = infeasibility(r) == 0.0;
    if (!primal_ok) {
      for (std::size_t c = 0; c < width_; ++c)
        if (eligible_column(c) && improving_direction(c) != 0) return std::nullopt;
      const LpStatus sd = dual_iterate();
      if (sd == LpStatus::IterationLimit) return std::nullopt;
      if (sd == LpStatus::Infeasible) return finish(out, sd);
    }
    current_objective_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) current_objective_ += cost_[j] * value_[j];
    degenerate_run_ = 0;
    bland_ = false;
    const LpStatus s2 = iterate(Phase::Two);
    if (s2 == LpStatus::IterationLimit) return std::nullopt;
    recompute_basics();
    return finish(out, s2);
  }

  LpResult run() {
    LpResult out;
    if (infeasible_bounds_) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    setup();
    limit_ = opt_.iteration_limit > 0 ? opt_.iteration_limit
                                      : static_cast<long>(50 * (rows_ + width_) + 1000);

    if (artificial_count_ > 0) {
      set_phase_costs(Phase::One);
      const LpStatus s1 = iterate(Phase::One);
      if (s1 == LpStatus::IterationLimit) return finish(out, s1);
      recompute_basics();
      double infeas = 0.0;
      for (std::size_t r = 0; r < rows_; ++r)
        if (is_artificial(basis_[r])) infeas += std::abs(value_[basis_[r]]);
      double scale = 1.0;
      for (double v : b_) scale = std::max(scale, std::abs(v));
      if (infeas > 1e-7 * scale) return finish(out, LpStatus::Infeasible);
      drive_out_artificials();
    }
    set_phase_costs(Phase::Two);
    const LpStatus s2 = iterate(Phase::Two);
    recompute_basics();
    return finish(out, s2);
  }

 private:
  bool is_artificial(std::size_t col) const { return col >= n_ + rows_; }

  double col_lower(std::size_t c) const {
    if (c < n_) return lower_[c];
    if (c < n_ + rows_) return 0.0;
    return 0.0;
  }
  double col_upper(std::size_t c) const {
    if (c < n_) return upper_[c];
    if (c < n_ + rows_) return equality_[c - n_] ? 0.0 : kInfinity;
    return artificial_open_[c - n_ - rows_] ? kInfinity : 0.0;
  }

  void setup() {
    // Nonbasic structurals start at a finite bound (lower preferred) or 0 if free.
    value_.assign(n_ + 2 * rows_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isfinite(lower_[j])) value_[j] = lower_[j];
      else if (std::isfinite(upper_[j])) value_[j] = upper_[j];
      else value_[j] = 0.0;
    }
    std::vector<double> resid(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = b_[i];
      for (std::size_t j = 0; j < n_; ++j) s -= A_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * value_[j];
      resid[i] = s;
    }

    // Rows whose logical cannot absorb the residual get an artificial.
    std::vector<int> art_sign(rows_, 0);
    artificial_count_ = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const bool logical_ok = equality_[i] ? std::abs(resid[i]) <= opt_.feasibility_tolerance
                                           : resid[i] >= -opt_.feasibility_tolerance;
      if (!logical_ok) {
        art_sign[i] = resid[i] >= 0.0 ? 1 : -1;
        ++artificial_count_;
      }
    }

    width_ = n_ + rows_ + artificial_count_;
    T_ = RowMatrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(width_));
    beta_.assign(rows_, 0.0);
    basis_.assign(rows_, 0);
    in_basis_.assign(width_, -1);
    artificial_open_.assign(artificial_count_, true);
    art_row_.clear();
    value_.resize(width_, 0.0);

    original_ = RowMatrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(width_));
    std::size_t next_art = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto ri = static_cast<Eigen::Index>(i);
      const double sgn = art_sign[i] != 0 ? static_cast<double>(art_sign[i]) : 1.0;
      // B = diag(1 or sign), so B⁻¹ scales row i by sgn.
      T_.row(ri).head(static_cast<Eigen::Index>(n_)) = sgn * A_.row(ri);
      T_(ri, static_cast<Eigen::Index>(n_ + i)) = sgn;
      original_.row(ri).head(static_cast<Eigen::Index>(n_)) = A_.row(ri);
      original_(ri, static_cast<Eigen::Index>(n_ + i)) = 1.0;
      if (art_sign[i] != 0) {
        const std::size_t col = n_ + rows_ + next_art;
        original_(ri, static_cast<Eigen::Index>(col)) = sgn;
        ++next_art;
        T_(ri, static_cast<Eigen::Index>(col)) = 1.0;
        basis_[i] = col;
        value_[col] = std::abs(resid[i]);
        art_row_.push_back(i);
      } else {
        basis_[i] = n_ + i;
        value_[n_ + i] = resid[i];
      }
      in_basis_[basis_[i]] = static_cast<long>(i);
      beta_[i] = value_[basis_[i]];
    }
  }

  void set_phase_costs(Phase phase) {
    phase_ = phase;
    phase_cost_.assign(width_, 0.0);
    if (phase == Phase::One) {
      for (std::size_t c = n_ + rows_; c < width_; ++c) phase_cost_[c] = 1.0;
    } else {
      for (std::size_t j = 0; j < n_; ++j) phase_cost_[j] = cost_[j];
    }
    refresh_reduced_costs();
    degenerate_run_ = 0;
    bland_ = false;
  }

  // d = c − c_Bᵀ T
  void refresh_reduced_costs() {
    Eigen::VectorXd cb(static_cast<Eigen::Index>(rows_));
    for (std::size_t r = 0; r < rows_; ++r) cb(static_cast<Eigen::Index>(r)) = phase_cost_[basis_[r]];
    Eigen::RowVectorXd red = -(cb.transpose() * T_);
    reduced_.resize(width_);
    for (std::size_t c = 0; c < width_; ++c) reduced_[c] = red(static_cast<Eigen::Index>(c)) + phase_cost_[c];
    for (std::size_t r = 0; r < rows_; ++r) reduced_[basis_[r]] = 0.0;
  }

  bool eligible_column(std::size_t c) const {
    if (in_basis_[c] >= 0) return false;
    if (is_artificial(c) && (phase_ == Phase::Two || !artificial_open_[c - n_ - rows_])) return false;
    return col_lower(c) < col_upper(c);
  }

  // Direction in which increasing/decreasing column c lowers the objective, or 0.
  int improving_direction(std::size_t c) const {
    const double dj = reduced_[c];
    const double tol = opt_.optimality_tolerance;
    const double lo = col_lower(c);
    const double hi = col_upper(c);
    const double v = value_[c];
    const bool can_up = !(std::isfinite(hi) && v >= hi);
    const bool can_down = !(std::isfinite(lo) && v <= lo);
    if (dj < -tol && can_up) return 1;
    if (dj > tol && can_down) return -1;
    return 0;
  }

  LpStatus iterate(Phase phase) {
    (void)phase;
    while (true) {
      if (iterations_ >= limit_) return LpStatus::IterationLimit;

      // Pricing.
      std::size_t enter = width_;
      int dir = 0;
      double best = 0.0;
      for (std::size_t c = 0; c < width_; ++c) {
        if (!eligible_column(c)) continue;
        const int d = improving_direction(c);
        if (d == 0) continue;
        if (bland_) {
          enter = c;
          dir = d;
          break;
        }
        const double score = std::abs(reduced_[c]);
        if (score > best) {
          best = score;
          enter = c;
          dir = d;
        }
      }
      if (enter == width_) {
        if (since_reinvert_ == 0) return LpStatus::Optimal;
        reinvert();  // confirm optimality on a fresh tableau
        continue;
      }

      // Ratio test, Harris style: the first pass finds the largest step that
      // keeps every basic variable within a small tolerance of its bounds, the
      // second picks the largest pivot among rows blocking within that step.
      const auto ce = static_cast<Eigen::Index>(enter);
      // Pivots are judged relative to the column so that big-M rows do not
      // admit near-singular bases.
      const double ptol = opt_.pivot_tolerance * std::max(1.0, T_.col(ce).cwiseAbs().maxCoeff());
      double relaxed = kInfinity;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double alpha = T_(static_cast<Eigen::Index>(r), ce) * dir;
        if (std::abs(alpha) <= ptol) continue;
        const double t = bound_distance(r, alpha, opt_.feasibility_tolerance);
        if (t < relaxed) relaxed = t;
      }
      double step = kInfinity;
      long leave_row = -1;
      double leave_alpha = 0.0;
      std::size_t leave_var = width_;
      if (std::isfinite(relaxed)) {
        for (std::size_t r = 0; r < rows_; ++r) {
          const double alpha = T_(static_cast<Eigen::Index>(r), ce) * dir;
          if (std::abs(alpha) <= ptol) continue;
          const double t = bound_distance(r, alpha, 0.0);
          if (t > relaxed) continue;
          const std::size_t bv = basis_[r];
          const bool take = leave_row < 0 || (bland_ ? bv < leave_var : std::abs(alpha) > std::abs(leave_alpha));
          if (take) {
            step = std::max(t, 0.0);
            leave_row = static_cast<long>(r);
            leave_alpha = alpha;
            leave_var = bv;
          }
        }
      }
      const double span = col_upper(enter) - col_lower(enter);
      const bool flip = std::isfinite(span) && (leave_row < 0 || span <= step);
      if (flip) step = span;
      if (!std::isfinite(step)) return LpStatus::Unbounded;

      ++iterations_;
      // Progress is judged on the objective, not the step: tiny steps caused
      // by round-off must not switch the anti-cycling rule off again.
      const double gain = std::abs(reduced_[enter]) * step;
      if (gain <= 1e-11 * (1.0 + std::abs(current_objective_))) {
        if (++degenerate_run_ >= opt_.degenerate_switch) bland_ = true;
      } else {
        degenerate_run_ = 0;
        bland_ = false;
      }
      current_objective_ -= gain;

      // Move along the edge.
      const double dj = reduced_[enter];
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = T_(static_cast<Eigen::Index>(r), ce);
        if (a != 0.0) beta_[r] -= a * dir * step;
      }
      value_[enter] += dir * step;
      objective_delta_ += dj * dir * step;

      if (flip) {
        // Snap to the opposite bound exactly.
        value_[enter] = dir > 0 ? col_upper(enter) : col_lower(enter);
        sync_basic_values();
        continue;
      }

      const auto lr = static_cast<std::size_t>(leave_row);
      const std::size_t out = basis_[lr];
      value_[out] = leave_alpha > 0.0 ? col_lower(out) : col_upper(out);
      if (is_artificial(out)) artificial_open_[out - n_ - rows_] = false;
      in_basis_[out] = -1;
      basis_[lr] = enter;
      in_basis_[enter] = static_cast<long>(lr);
      beta_[lr] = value_[enter];
      pivot(lr, enter);
      sync_basic_values();
      if (since_reinvert_ >= kReinvertInterval) reinvert();
    }
  }

  // Amount by which basic row r lies outside its bounds (0 when inside the
  // feasibility tolerance); negative below the lower bound.
  double infeasibility(std::size_t r) const {
    const std::size_t bv = basis_[r];
    const double lo = col_lower(bv);
    const double hi = col_upper(bv);
    const double v = beta_[r];
    if (std::isfinite(lo) && v < lo - opt_.feasibility_tolerance * (1.0 + std::abs(lo))) return v - lo;
    if (std::isfinite(hi) && v > hi + opt_.feasibility_tolerance * (1.0 + std::abs(hi))) return v - hi;
    return 0.0;
  }

  // Bounded dual simplex from a dual feasible basis; stops once the basis is
  // primal feasible. Entering columns are chosen by a two-pass ratio test.
  // After a run of dual degenerate steps both choices fall back to the
  // lowest index (Bland), which cannot cycle.
  LpStatus dual_iterate() {
    const long cap = iterations_ + static_cast<long>(2 * (rows_ + width_));
    int degenerate = 0;
    bool bland = false;
    while (true) {
      if (iterations_ >= std::min(limit_, cap)) return LpStatus::IterationLimit;
      long leave = -1;
      double worst = 0.0;
      std::size_t leave_var = width_;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double e = std::abs(infeasibility(r));
        if (e == 0.0) continue;
        const bool take = bland ? basis_[r] < leave_var : e > worst;
        if (take) {
          worst = e;
          leave = static_cast<long>(r);
          leave_var = basis_[r];
        }
      }
      if (leave < 0) return LpStatus::Optimal;
      const auto lr = static_cast<std::size_t>(leave);
      const auto ri = static_cast<Eigen::Index>(lr);
      const bool below = infeasibility(lr) < 0.0;
      const double ptol = opt_.pivot_tolerance * std::max(1.0, T_.row(ri).cwiseAbs().maxCoeff());

      // Column c moves in direction dir; the leaving variable changes by
      // −alpha·dir, which must point back towards its violated bound.
      auto direction = [&](std::size_t c, double alpha) {
        const double lo = col_lower(c);
        const double hi = col_upper(c);
        const double v = value_[c];
        const bool can_up = !(std::isfinite(hi) && v >= hi);
        const bool can_down = !(std::isfinite(lo) && v <= lo);
        const int want = (below ? -1 : 1) * (alpha > 0.0 ? 1 : -1);
        if (want > 0 && can_up) return 1;
        if (want < 0 && can_down) return -1;
        return 0;
      };
      double relaxed = kInfinity;
      for (std::size_t c = 0; c < width_; ++c) {
        if (!eligible_column(c)) continue;
        const double alpha = T_(ri, static_cast<Eigen::Index>(c));
        if (std::abs(alpha) <= ptol) continue;
        const int dir = direction(c, alpha);
        if (dir == 0) continue;
        const double ratio = (std::max(0.0, reduced_[c] * dir) + opt_.optimality_tolerance) / std::abs(alpha);
        relaxed = std::min(relaxed, ratio);
      }
      std::size_t enter = width_;
      double enter_alpha = 0.0;
      double enter_ratio = 0.0;
      if (std::isfinite(relaxed)) {
        for (std::size_t c = 0; c < width_; ++c) {
          if (!eligible_column(c)) continue;
          const double alpha = T_(ri, static_cast<Eigen::Index>(c));
          if (std::abs(alpha) <= ptol) continue;
          if (direction(c, alpha) == 0) continue;
          const double ratio = std::max(0.0, reduced_[c] * direction(c, alpha)) / std::abs(alpha);
          if (ratio > relaxed) continue;
          if (enter == width_ || (!bland && std::abs(alpha) > std::abs(enter_alpha))) {
            enter = c;
            enter_alpha = alpha;
            enter_ratio = ratio;
          }
        }
      }
      if (enter == width_) {
        if (since_reinvert_ == 0) return LpStatus::Infeasible;
        reinvert();
        continue;
      }

      ++iterations_;
      if (enter_ratio * worst <= 1e-11) {
        if (++degenerate >= opt_.degenerate_switch) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      const std::size_t out = basis_[lr];
      const double target = below ? col_lower(out) : col_upper(out);
      const double delta = (beta_[lr] - target) / enter_alpha;
      const auto ce = static_cast<Eigen::Index>(enter);
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = T_(static_cast<Eigen::Index>(r), ce);
        if (a != 0.0) beta_[r] -= a * delta;
      }
      value_[enter] += delta;
      value_[out] = target;
      in_basis_[out] = -1;
      basis_[lr] = enter;
      in_basis_[enter] = static_cast<long>(lr);
      beta_[lr] = value_[enter];
      pivot(lr, enter);
      sync_basic_values();
      if (since_reinvert_ >= kReinvertInterval) reinvert();
    }
  }

  // Step along the entering direction until basic row r reaches the bound it
  // moves towards (relaxed outward by tol); infinity when that bound is open.
  double bound_distance(std::size_t r, double alpha, double tol) const {
    const std::size_t bv = basis_[r];
    if (alpha > 0.0) {
      const double lo = col_lower(bv);
      if (!std::isfinite(lo)) return kInfinity;
      return (beta_[r] - lo + tol) / alpha;
    }
    const double hi = col_upper(bv);
    if (!std::isfinite(hi)) return kInfinity;
    return (hi - beta_[r] + tol) / (-alpha);
  }

  // Rebuild the tableau from the original columns to shed accumulated
  // round-off, then refresh basic values and reduced costs.
  // Returns false when the basis is numerically singular.
  bool reinvert() {
    const auto R = static_cast<Eigen::Index>(rows_);
    RowMatrix B(R, R);
    for (std::size_t r = 0; r < rows_; ++r) B.col(static_cast<Eigen::Index>(r)) = original_.col(static_cast<Eigen::Index>(basis_[r]));
    const Eigen::MatrixXd basis_matrix = B;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    if (!(lu.rcond() > 1e-13)) return false;
    T_ = lu.solve(Eigen::MatrixXd(original_));
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      T_.col(static_cast<Eigen::Index>(basis_[r])).setZero();
      T_(ri, static_cast<Eigen::Index>(basis_[r])) = 1.0;
    }
    recompute_basics();
    refresh_reduced_costs();
    since_reinvert_ = 0;
    return true;
  }

  void pivot(std::size_t r, std::size_t c) {
    const auto ri = static_cast<Eigen::Index>(r);
    const auto ci = static_cast<Eigen::Index>(c);
    const double piv = T_(ri, ci);
    ++since_reinvert_;
    T_.row(ri) /= piv;
    T_(ri, ci) = 1.0;
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i == ri) continue;
      const double f = T_(i, ci);
      if (f == 0.0) continue;
      T_.row(i) -= f * T_.row(ri);
      T_(i, ci) = 0.0;
    }
    const double f = reduced_[c];
    if (f != 0.0) {
      for (std::size_t k = 0; k < width_; ++k) reduced_[k] -= f * T_(ri, static_cast<Eigen::Index>(k));
      reduced_[c] = 0.0;
    }
  }

  void sync_basic_values() {
    for (std::size_t r = 0; r < rows_; ++r) value_[basis_[r]] = beta_[r];
  }

  // β = B⁻¹ (b − N x_N); B⁻¹ is the logical block of the tableau.
  void recompute_basics() {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows_));
    for (std::size_t i = 0; i < rows_; ++i) rhs(static_cast<Eigen::Index>(i)) = b_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      if (in_basis_[j] >= 0 || value_[j] == 0.0) continue;
      rhs -= A_.col(static_cast<Eigen::Index>(j)) * value_[j];
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t c = n_ + i;
      if (in_basis_[c] < 0 && value_[c] != 0.0) rhs(static_cast<Eigen::Index>(i)) -= value_[c];
    }
    // Artificial columns are σ e_i; nonbasic artificials sit at 0.
    const Eigen::VectorXd beta =
        T_.middleCols(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(rows_)) * rhs;
    for (std::size_t r = 0; r < rows_; ++r) beta_[r] = beta(static_cast<Eigen::Index>(r));
    sync_basic_values();
  }

  // Replace basic artificials (all at ~0) by non-artificial columns where possible.
  void drive_out_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
      const std::size_t bv = basis_[r];
      if (!is_artificial(bv)) continue;
      std::size_t best_col = width_;
      double best = 1e-9;
      for (std::size_t c = 0; c < n_ + rows_; ++c) {
        if (in_basis_[c] >= 0) continue;
        const double a = std::abs(T_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        if (a > best) {
          best = a;
          best_col = c;
        }
      }
      artificial_open_[bv - n_ - rows_] = false;
      if (best_col == width_) continue;  // redundant row: artificial stays basic, fixed at 0
      value_[bv] = 0.0;
      in_basis_[bv] = -1;
      basis_[r] = best_col;
      in_basis_[best_col] = static_cast<long>(r);
      pivot(r, best_col);
      recompute_basics();
    }
  }

  LpResult& finish(LpResult& out, LpStatus status) {
    out.status = status;
    out.iterations = iterations_;
    out.x.assign(value_.begin(), value_.begin() + static_cast<std::ptrdiff_t>(n_));
    // Clamp tiny bound excursions left by floating-point drift.
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isfinite(lower_[j]) && out.x[j] < lower_[j]) out.x[j] = lower_[j];
      if (std::isfinite(upper_[j]) && out.x[j] > upper_[j]) out.x[j] = upper_[j];
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += cost_[j] * out.x[j];
    out.objective = obj;
    if (status == LpStatus::Optimal) {
      out.basis.columns.resize(n_);
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j] >= 0) out.basis.columns[j] = BasisStatus::Basic;
        else if (std::isfinite(lower_[j]) && value_[j] == lower_[j]) out.basis.columns[j] = BasisStatus::AtLower;
        else if (std::isfinite(upper_[j]) && value_[j] == upper_[j]) out.basis.columns[j] = BasisStatus::AtUpper;
        else out.basis.columns[j] = BasisStatus::Zero;
      }
      out.basis.rows.assign(rows_, BasisStatus::AtLower);
      for (std::size_t r = 0; r < rows_; ++r) {
        const std::size_t bv = basis_[r];
        // A basic artificial only remains on a redundant row; its logical
        // spans the same column.
        if (bv >= n_) out.basis.rows[bv < n_ + rows_ ? bv - n_ : art_row_[bv - n_ - rows_]] = BasisStatus::Basic;
      }
    }
    return out;
  }

  LpOptions opt_;
  std::size_t n_ = 0;
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
  std::size_t artificial_count_ = 0;
  bool infeasible_bounds_ = false;
  RowMatrix A_;
  RowMatrix T_;
  RowMatrix original_;  // [A | I | artificial columns], never pivoted
  long since_reinvert_ = 0;
  std::vector<double> b_;
  std::vector<bool> equality_;
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> value_;
  std::vector<double> beta_;
  std::vector<std::size_t> basis_;
  std::vector<long> in_basis_;
  std::vector<bool> artificial_open_;
  std::vector<std::size_t> art_row_;
  std::vector<double> phase_cost_;
  std::vector<double> reduced_;
  Phase phase_ = Phase::One;
  long iterations_ = 0;
  long limit_ = 0;
  int degenerate_run_ = 0;
  bool bland_ = false;
  double objective_delta_ = 0.0;
  double current_objective_ = 0.0;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem, const LpOptions& options, const LpBasis* start) {
  if (problem.variable_count() == 0 && problem.constraints.empty()) {
    LpResult r;
    r.status = LpStatus::Optimal;
    return r;
  }
  for (double c : problem.objective)
    if (!std::isfinite(c)) throw std::invalid_argument("lp: non-finite objective coefficient");
  if (start) {
    Simplex warm(problem, options);
    if (auto r = warm.run_warm(*start)) return *std::move(r);
  }
  Simplex s(problem, options);
  return s.run();
}

}  // namespace gridrisk::milp
