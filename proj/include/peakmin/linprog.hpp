#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace peakmin {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix, just large enough for the LP sizes handled here.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  double* row_ptr(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row_ptr(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
};

/// Linear program in the canonical form used throughout:
///   minimize    objective' z
///   subject to  ineq_matrix z <= ineq_rhs
///               var_lower <= z <= var_upper   (+-inf allowed)
struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  Matrix ineq_matrix;
  std::vector<double> ineq_rhs;
  std::vector<double> var_lower;
  std::vector<double> var_upper;

  int num_rows() const { return static_cast<int>(ineq_rhs.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

/// Primal-dual answer. ineq_duals holds one multiplier per inequality row;
/// for a minimization with Az <= b they are nonnegative at optimality.
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> primal;
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ineq_duals;
};

/// Throws std::invalid_argument on inconsistent dimensions or NaNs.
inline void validate(const LpProblem& p) {
  const auto n = static_cast<std::size_t>(p.num_vars);
  if (p.num_vars < 0) throw std::invalid_argument("lp: negative num_vars");
  if (p.objective.size() != n) throw std::invalid_argument("lp: objective size mismatch");
  if (p.var_lower.size() != n || p.var_upper.size() != n)
    throw std::invalid_argument("lp: bound size mismatch");
  if (p.ineq_matrix.rows != p.num_rows())
    throw std::invalid_argument("lp: row count mismatch between matrix and rhs");
  if (p.ineq_matrix.rows > 0 && p.ineq_matrix.cols != p.num_vars)
    throw std::invalid_argument("lp: matrix column count mismatch");
  for (double c : p.objective)
    if (std::isnan(c)) throw std::invalid_argument("lp: NaN in objective");
  for (double v : p.ineq_rhs)
    if (std::isnan(v)) throw std::invalid_argument("lp: NaN in rhs");
  for (double v : p.ineq_matrix.data)
    if (!std::isfinite(v)) throw std::invalid_argument("lp: non-finite matrix entry");
  for (int j = 0; j < p.num_vars; ++j) {
    if (std::isnan(p.var_lower[j]) || std::isnan(p.var_upper[j]))
      throw std::invalid_argument("lp: NaN bound");
    if (p.var_lower[j] > p.var_upper[j])
      throw std::invalid_argument("lp: lower bound exceeds upper bound");
  }
}

/// Plain-text dump for bug reports.
inline std::string debug_dump(const LpProblem& p) {
  std::ostringstream os;
  os.precision(17);
  os << "lp: " << p.num_vars << " vars, " << p.num_rows() << " rows\n";
  os << "min";
  for (int j = 0; j < p.num_vars; ++j) os << ' ' << p.objective[j];
  os << '\n';
  for (int i = 0; i < p.num_rows(); ++i) {
    os << "row " << i << ':';
    for (int j = 0; j < p.num_vars; ++j) os << ' ' << p.ineq_matrix(i, j);
    os << " <= " << p.ineq_rhs[i] << '\n';
  }
  for (int j = 0; j < p.num_vars; ++j)
    os << "var " << j << " in [" << p.var_lower[j] << ", " << p.var_upper[j] << "]\n";
  return os.str();
}

namespace detail {

// Two-phase primal simplex on the bounded-variable standard form
//   A z + s = b,  lo <= (z, s, a) <= up,
// with slacks s in [0, inf) and phase-1 artificials a in [0, inf) added only
// for rows whose initial slack value is negative. The full tableau
// T = B^-1 [A | I | arts] is maintained densely; the slack block of T is
// therefore always B^-1, which is where the duals are read from at the end.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LpProblem& p) : p_(p) {}

  LpSolution run() {
    init();
    LpSolution sol;
    if (num_art_ > 0) {
      const Step r1 = iterate();                       // phase 1
      if (r1 == Step::IterationLimit) return make_failed(LpStatus::IterationLimit);
      if (r1 == Step::Unbounded) return make_failed(LpStatus::IterationLimit);
      double infeas = 0.0;
      for (int j = first_art_; j < num_cols_; ++j) infeas += xval_[j];
      if (infeas > 1e-8 * (1.0 + rhs_scale_)) return make_failed(LpStatus::Infeasible);
      evict_artificials();
    }
    enter_phase2();
    const Step r2 = iterate();
    if (r2 == Step::IterationLimit) return make_failed(LpStatus::IterationLimit);
    if (r2 == Step::Unbounded) return make_failed(LpStatus::Unbounded);
    return make_optimal();
  }

 private:
  enum class Step { Optimal, Unbounded, IterationLimit };
  enum VarState : std::int8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeZero = 3 };

  static constexpr double kPivTol = 1e-9;
  static constexpr double kDualTol = 1e-9;
  static constexpr double kDegenStep = 1e-11;

  void init() {
    n_ = p_.num_vars;
    m_ = p_.num_rows();
    iter_cap_ = 50 * (m_ + n_ + 1);
    degen_limit_ = 100 + 2 * m_;

    rhs_scale_ = 0.0;
    for (double b : p_.ineq_rhs) rhs_scale_ = std::max(rhs_scale_, std::fabs(b));

    // Nonbasic structural placement: lower bound if finite, else upper,
    // else parked at zero (free).
    lo_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
    up_.assign(static_cast<std::size_t>(n_ + m_), kInf);
    xval_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
    state_.assign(static_cast<std::size_t>(n_ + m_), kAtLower);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = p_.var_lower[j];
      up_[j] = p_.var_upper[j];
      if (std::isfinite(lo_[j])) {
        xval_[j] = lo_[j];
        state_[j] = kAtLower;
      } else if (std::isfinite(up_[j])) {
        xval_[j] = up_[j];
        state_[j] = kAtUpper;
      } else {
        xval_[j] = 0.0;
        state_[j] = kFreeZero;
      }
    }

    // Initial slack values; rows violated at the starting point get an
    // artificial basic variable with column -e_r.
    std::vector<double> slack_val(static_cast<std::size_t>(m_), 0.0);
    std::vector<int> art_row;
    for (int i = 0; i < m_; ++i) {
      double act = 0.0;
      for (int j = 0; j < n_; ++j) act += p_.ineq_matrix(i, j) * xval_[j];
      slack_val[i] = p_.ineq_rhs[i] - act;
      if (slack_val[i] < 0.0) art_row.push_back(i);
    }
    num_art_ = static_cast<int>(art_row.size());
    first_art_ = n_ + m_;
    num_cols_ = n_ + m_ + num_art_;
    lo_.resize(static_cast<std::size_t>(num_cols_), 0.0);
    up_.resize(static_cast<std::size_t>(num_cols_), kInf);
    xval_.resize(static_cast<std::size_t>(num_cols_), 0.0);
    state_.resize(static_cast<std::size_t>(num_cols_), kAtLower);

    // Tableau rows: B^-1 [A | I | arts]. The initial basis is diagonal with
    // +1 for slack-basic rows and -1 for artificial-basic rows, so rows with
    // an artificial start negated.
    tab_ = Matrix(m_, num_cols_, 0.0);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    std::vector<int> art_of_row(static_cast<std::size_t>(m_), -1);
    for (int k = 0; k < num_art_; ++k) art_of_row[art_row[static_cast<std::size_t>(k)]] = first_art_ + k;
    for (int i = 0; i < m_; ++i) {
      double* row = tab_.row_ptr(i);
      const double sign = art_of_row[i] >= 0 ? -1.0 : 1.0;
      for (int j = 0; j < n_; ++j) row[j] = sign * p_.ineq_matrix(i, j);
      row[n_ + i] = sign;
      if (art_of_row[i] >= 0) {
        row[art_of_row[i]] = 1.0;  // column -e_i negated
        basis_[i] = art_of_row[i];
        xval_[art_of_row[i]] = -slack_val[i];
        state_[art_of_row[i]] = kBasic;
        state_[n_ + i] = kAtLower;  // slack parked at 0
      } else {
        basis_[i] = n_ + i;
        xval_[n_ + i] = slack_val[i];
        state_[n_ + i] = kBasic;
      }
    }

    // Phase-1 objective: sum of artificials.
    cost_.assign(static_cast<std::size_t>(num_cols_), 0.0);
    for (int j = first_art_; j < num_cols_; ++j) cost_[j] = 1.0;
    in_phase1_ = num_art_ > 0;
    if (!in_phase1_) set_phase2_cost();
    refresh_reduced_costs();
  }

  void set_phase2_cost() {
    cost_.assign(static_cast<std::size_t>(num_cols_), 0.0);
    for (int j = 0; j < n_; ++j) cost_[j] = p_.objective[j];
  }

  void enter_phase2() {
    // Artificials are frozen at zero for the rest of the solve.
    for (int j = first_art_; j < num_cols_; ++j) { lo_[j] = 0.0; up_[j] = 0.0; }
    in_phase1_ = false;
    set_phase2_cost();
    refresh_reduced_costs();
  }

  // d_j = cost_j - cost_B' T_j, recomputed from scratch.
  void refresh_reduced_costs() {
    dj_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = tab_.row_ptr(i);
      for (int j = 0; j < num_cols_; ++j) dj_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) dj_[basis_[i]] = 0.0;
  }

  // Entering variable: Dantzig pricing (most improving reduced cost, lowest
  // index on ties); Bland's rule once the degeneracy counter has tripped.
  // Returns {column, direction} or {-1, 0} when priced optimal.
  std::pair<int, int> price() const {
    int best_j = -1, best_dir = 0;
    double best_score = -kDualTol;
    for (int j = 0; j < num_cols_; ++j) {
      const VarState st = static_cast<VarState>(state_[j]);
      if (st == kBasic) continue;
      if (lo_[j] == up_[j]) continue;  // fixed (includes frozen artificials)
      const double d = dj_[j];
      double score;
      int dir;
      if (st == kAtLower) {
        score = d;
        dir = +1;
      } else if (st == kAtUpper) {
        score = -d;
        dir = -1;
      } else {  // free at zero: move against the gradient
        score = -std::fabs(d);
        dir = d > 0.0 ? -1 : +1;
      }
      if (score < best_score) {
        if (bland_) return {j, dir};  // lowest improving index
        best_score = score;
        best_j = j;
        best_dir = dir;
      }
    }
    return {best_j, best_dir};
  }

  Step iterate() {
    while (true) {
      auto [j, dir] = price();
      if (j < 0) {
        // Confirm optimality against freshly recomputed reduced costs;
        // incremental updates drift over long solves.
        refresh_reduced_costs();
        auto [j2, dir2] = price();
        if (j2 < 0) return Step::Optimal;
        j = j2;
        dir = dir2;
      }
      if (++iters_ > iter_cap_) return Step::IterationLimit;

      // Bounded ratio test: step t >= 0 along x_j += dir*t moves basics by
      // x_B -= dir*t*T_col. First pass finds the tightest limit.
      double t_best = kInf;
      if (std::isfinite(lo_[j]) && std::isfinite(up_[j])) t_best = up_[j] - lo_[j];
      for (int i = 0; i < m_; ++i) {
        const double w = tab_(i, j);
        if (std::fabs(w) <= kPivTol) continue;
        const double wd = dir * w;
        const int k = basis_[i];
        double t;
        if (wd > 0.0) {
          if (!std::isfinite(lo_[k])) continue;
          t = (xval_[k] - lo_[k]) / wd;
        } else {
          if (!std::isfinite(up_[k])) continue;
          t = (up_[k] - xval_[k]) / (-wd);
        }
        if (t < 0.0) t = 0.0;  // fp noise on active bounds
        if (t < t_best) t_best = t;
      }
      if (!std::isfinite(t_best)) return Step::Unbounded;

      // Second pass: pick the leaving row among ties. Stability rule prefers
      // the largest pivot magnitude; Bland prefers the lowest variable index.
      const double t_tie = t_best + 1e-12 * (1.0 + t_best);
      int leave_row = -1;
      double leave_w = 0.0;
      bool leave_at_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double w = tab_(i, j);
        if (std::fabs(w) <= kPivTol) continue;
        const double wd = dir * w;
        const int k = basis_[i];
        double t;
        bool at_upper;
        if (wd > 0.0) {
          if (!std::isfinite(lo_[k])) continue;
          t = (xval_[k] - lo_[k]) / wd;
          at_upper = false;
        } else {
          if (!std::isfinite(up_[k])) continue;
          t = (up_[k] - xval_[k]) / (-wd);
          at_upper = true;
        }
        if (t < 0.0) t = 0.0;
        if (t > t_tie) continue;
        const bool better =
            leave_row < 0 ||
            (bland_ ? k < basis_[leave_row] : std::fabs(w) > std::fabs(leave_w));
        if (better) {
          leave_row = i;
          leave_w = w;
          leave_at_upper = at_upper;
        }
      }

      const bool own_bound_hit =
          std::isfinite(lo_[j]) && std::isfinite(up_[j]) && (up_[j] - lo_[j]) <= t_tie;
      if (leave_row < 0 || (own_bound_hit && (up_[j] - lo_[j]) <= t_best)) {
        bound_flip(j, dir);
        degen_run_ = 0;  // flips make strict progress (lo < up here)
        continue;
      }

      pivot(j, dir, t_best, leave_row, leave_at_upper);
      if (t_best <= kDegenStep) {
        if (++degen_run_ > degen_limit_) bland_ = true;
      } else {
        degen_run_ = 0;
      }
    }
  }

  void bound_flip(int j, int dir) {
    const double t = up_[j] - lo_[j];
    for (int i = 0; i < m_; ++i) {
      const double w = tab_(i, j);
      if (w != 0.0) xval_[basis_[i]] -= dir * t * w;
    }
    if (dir > 0) {
      xval_[j] = up_[j];
      state_[j] = kAtUpper;
    } else {
      xval_[j] = lo_[j];
      state_[j] = kAtLower;
    }
  }

  void pivot(int j, int dir, double t, int r, bool leave_at_upper) {
    // Value updates before the row operations (the column is still T_j).
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double w = tab_(i, j);
      if (w != 0.0) xval_[basis_[i]] -= dir * t * w;
    }
    const int leaving = basis_[r];
    xval_[j] += dir * t;
    xval_[leaving] = leave_at_upper ? up_[leaving] : lo_[leaving];
    state_[leaving] = leave_at_upper ? kAtUpper : kAtLower;
    state_[j] = kBasic;
    basis_[r] = j;

    // Eliminate column j from every other row and from the reduced costs.
    double* prow = tab_.row_ptr(r);
    const double piv = prow[j];
    const double inv_piv = 1.0 / piv;
    for (int c = 0; c < num_cols_; ++c) prow[c] *= inv_piv;
    prow[j] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = tab_.row_ptr(i);
      const double f = row[j];
      if (f == 0.0) continue;
      for (int c = 0; c < num_cols_; ++c) row[c] -= f * prow[c];
      row[j] = 0.0;
    }
    const double fd = dj_[j];
    if (fd != 0.0) {
      for (int c = 0; c < num_cols_; ++c) dj_[c] -= fd * prow[c];
    }
    dj_[j] = 0.0;
  }

  // After phase 1, pivot leftover zero-valued artificials out of the basis;
  // rows admitting no pivot are redundant and keep the artificial pinned.
  void evict_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < first_art_) continue;
      double* row = tab_.row_ptr(i);
      int best = -1;
      double best_w = 0.0;
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == kBasic) continue;
        if (std::fabs(row[j]) > std::fabs(best_w)) {
          best = j;
          best_w = row[j];
        }
      }
      if (best < 0 || std::fabs(best_w) <= 1e-7) continue;  // redundant row
      const int dir = 1;  // degenerate pivot, direction immaterial
      pivot(best, dir, 0.0, i, false);
    }
  }

  LpSolution make_failed(LpStatus status) const {
    LpSolution sol;
    sol.status = status;
    return sol;
  }

  LpSolution make_optimal() {
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.primal.assign(xval_.begin(), xval_.begin() + n_);
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += p_.objective[j] * sol.primal[j];
    sol.objective_value = obj;
    // Simplex multipliers from the slack block (= B^-1); the dual of row i
    // is the reduced cost of its slack at optimality.
    sol.ineq_duals.assign(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      double pi = 0.0;
      for (int r = 0; r < m_; ++r) {
        const double cb = cost_[basis_[r]];
        if (cb != 0.0) pi += cb * tab_(r, n_ + i);
      }
      sol.ineq_duals[i] = std::max(0.0, -pi);
    }
    return sol;
  }

  const LpProblem& p_;
  int n_ = 0, m_ = 0;
  int num_cols_ = 0, num_art_ = 0, first_art_ = 0;
  int iters_ = 0, iter_cap_ = 0;
  int degen_run_ = 0, degen_limit_ = 0;
  bool bland_ = false;
  bool in_phase1_ = false;
  double rhs_scale_ = 0.0;
  Matrix tab_;
  std::vector<double> dj_, xval_, lo_, up_, cost_;
  std::vector<int> basis_;
  std::vector<std::int8_t> state_;
};

}  // namespace detail

/// Solves the LP. Returns primal and row duals with status Optimal, or a
/// diagnosis status (Infeasible / Unbounded / IterationLimit) otherwise.
inline LpSolution solve(const LpProblem& p) {
  validate(p);
  detail::SimplexSolver solver(p);
  return solver.run();
}

/// Lagrangian dual value of (p, duals):
///   q(y) = -b'y + sum_j min over [lo_j, up_j] of (c + A'y)_j z_j.
/// Returns -inf when the multipliers are dual-infeasible beyond tol (a
/// reduced cost pointing at a missing bound).
inline double dual_objective_value(const LpProblem& p, const std::vector<double>& duals,
                                   double tol = 1e-9) {
  if (duals.size() != static_cast<std::size_t>(p.num_rows()))
    throw std::invalid_argument("dual_objective_value: dual size mismatch");
  double value = 0.0;
  for (int i = 0; i < p.num_rows(); ++i) value -= duals[i] * p.ineq_rhs[i];
  for (int j = 0; j < p.num_vars; ++j) {
    double r = p.objective[j];
    for (int i = 0; i < p.num_rows(); ++i) r += duals[i] * p.ineq_matrix(i, j);
    if (r > tol) {
      if (!std::isfinite(p.var_lower[j])) return -kInf;
      value += r * p.var_lower[j];
    } else if (r < -tol) {
      if (!std::isfinite(p.var_upper[j])) return -kInf;
      value += r * p.var_upper[j];
    } else if (std::isfinite(p.var_lower[j]) && std::isfinite(p.var_upper[j])) {
      value += std::min(r * p.var_lower[j], r * p.var_upper[j]);
    }
    // else: negligible reduced cost on an unbounded variable, contribution ~0
  }
  return value;
}

/// KKT certificate check: primal feasibility, dual feasibility, stationarity
/// and complementary slackness, all within tol (scaled by the local data
/// magnitudes). Expects s.status == Optimal.
inline bool check_kkt(const LpProblem& p, const LpSolution& s, double tol) {
  if (s.status != LpStatus::Optimal) return false;
  if (s.primal.size() != static_cast<std::size_t>(p.num_vars)) return false;
  if (s.ineq_duals.size() != static_cast<std::size_t>(p.num_rows())) return false;
  const auto& z = s.primal;
  const auto& y = s.ineq_duals;

  for (int i = 0; i < p.num_rows(); ++i) {
    if (y[i] < -tol) return false;
    double act = 0.0;
    for (int j = 0; j < p.num_vars; ++j) act += p.ineq_matrix(i, j) * z[j];
    const double scale = 1.0 + std::fabs(p.ineq_rhs[i]);
    const double slack = p.ineq_rhs[i] - act;
    if (slack < -tol * scale) return false;                // primal feasibility
    if (y[i] > tol && slack > tol * scale) return false;   // complementary slackness
  }
  for (int j = 0; j < p.num_vars; ++j) {
    const double lo = p.var_lower[j], up = p.var_upper[j];
    if (z[j] < lo - tol * (1.0 + std::fabs(lo))) return false;
    if (z[j] > up + tol * (1.0 + std::fabs(up))) return false;
    double r = p.objective[j];
    double scale = 1.0 + std::fabs(p.objective[j]);
    for (int i = 0; i < p.num_rows(); ++i) {
      r += y[i] * p.ineq_matrix(i, j);
      scale += std::fabs(y[i] * p.ineq_matrix(i, j));
    }
    const double stol = tol * scale;
    const bool at_lower = std::isfinite(lo) && z[j] <= lo + tol * (1.0 + std::fabs(lo));
    const bool at_upper = std::isfinite(up) && z[j] >= up - tol * (1.0 + std::fabs(up));
    // Stationarity of c + A'y against the active bound multipliers.
    if (at_lower && at_upper) continue;  // fixed variable, any r admissible
    if (at_lower) {
      if (r < -stol) return false;
    } else if (at_upper) {
      if (r > stol) return false;
    } else {
      if (std::fabs(r) > stol) return false;
    }
  }
  return true;
}

}  // namespace peakmin
