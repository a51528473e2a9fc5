#pragma once

// Test-only oracles for the LP solver: brute-force vertex enumeration on
// small boxed problems, plus a seeded random-problem generator. Kept fully
// independent of the simplex implementation it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "peakmin/linprog.hpp"
#include "peakmin/random.hpp"

namespace lp_oracle {

struct Result {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> z;
};

inline bool point_feasible(const peakmin::LpProblem& p, const std::vector<double>& z,
                           double tol = 1e-8) {
  for (int j = 0; j < p.num_vars; ++j) {
    if (z[j] < p.var_lower[j] - tol || z[j] > p.var_upper[j] + tol) return false;
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    double act = 0.0;
    for (int j = 0; j < p.num_vars; ++j) act += p.ineq_matrix(i, j) * z[j];
    if (act > p.ineq_rhs[i] + tol * (1.0 + std::fabs(p.ineq_rhs[i]))) return false;
  }
  return true;
}

// Enumerates every candidate vertex of {Az <= b, lo <= z <= up} with finite
// boxes: choose k rows to hold with equality, fix the remaining n-k
// variables at one of their bounds, and solve the k x k system for the free
// variables. The feasible region is compact, so if it is nonempty the
// optimum is attained at one of these points.
inline Result enumerate_optimum(const peakmin::LpProblem& p) {
  const int n = p.num_vars;
  const int m = p.num_rows();
  Result best;

  std::vector<int> rows;   // active row subset
  std::vector<int> freev;  // variables solved from the active rows

  // Iterate over subsets of rows of size k via combination walking.
  for (int k = 0; k <= std::min(n, m); ++k) {
    std::vector<int> rc(k);
    for (int i = 0; i < k; ++i) rc[i] = i;
    bool rows_done = k > m;
    while (!rows_done) {
      // choose which k variables are free (determined by the active rows)
      std::vector<int> vc(k);
      for (int i = 0; i < k; ++i) vc[i] = i;
      bool vars_done = k > n;
      if (k == 0) vars_done = false;  // single empty choice
      while (!vars_done) {
        const int num_fixed = n - k;
        // every lower/upper assignment of the fixed variables
        for (int mask = 0; mask < (1 << num_fixed); ++mask) {
          std::vector<double> z(n, 0.0);
          std::vector<char> is_free(n, 0);
          for (int i = 0; i < k; ++i) is_free[vc[i]] = 1;
          int bit = 0;
          for (int j = 0; j < n; ++j) {
            if (is_free[j]) continue;
            z[j] = (mask >> bit & 1) ? p.var_upper[j] : p.var_lower[j];
            ++bit;
          }
          if (k > 0) {
            Eigen::MatrixXd M(k, k);
            Eigen::VectorXd rhs(k);
            for (int r = 0; r < k; ++r) {
              const int row = rc[r];
              double acc = p.ineq_rhs[row];
              for (int j = 0; j < n; ++j)
                if (!is_free[j]) acc -= p.ineq_matrix(row, j) * z[j];
              rhs(r) = acc;
              for (int c = 0; c < k; ++c) M(r, c) = p.ineq_matrix(row, vc[c]);
            }
            Eigen::VectorXd sol = M.partialPivLu().solve(rhs);
            if (!sol.allFinite()) continue;
            if ((M * sol - rhs).cwiseAbs().maxCoeff() > 1e-7) continue;  // singular
            for (int c = 0; c < k; ++c) z[vc[c]] = sol(c);
          }
          if (!point_feasible(p, z)) continue;
          double obj = 0.0;
          for (int j = 0; j < n; ++j) obj += p.objective[j] * z[j];
          if (!best.feasible || obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
            best.z = z;
          }
        }
        // next variable combination
        if (k == 0) break;
        int i = k - 1;
        while (i >= 0 && vc[i] == n - k + i) --i;
        if (i < 0) break;
        ++vc[i];
        for (int t = i + 1; t < k; ++t) vc[t] = vc[t - 1] + 1;
      }
      // next row combination
      if (k == 0) break;
      int i = k - 1;
      while (i >= 0 && rc[i] == m - k + i) --i;
      if (i < 0) break;
      ++rc[i];
      for (int t = i + 1; t < k; ++t) rc[t] = rc[t - 1] + 1;
    }
  }
  return best;
}

/// Seeded random boxed LP: n in 1..6, m in 0..8, entries O(1). Roughly one
/// in six draws is infeasible by construction.
inline peakmin::LpProblem random_boxed_lp(peakmin::Rng& rng) {
  peakmin::LpProblem p;
  p.num_vars = 1 + static_cast<int>(rng.below(6));
  const int m = static_cast<int>(rng.below(9));
  p.objective.resize(p.num_vars);
  p.var_lower.resize(p.num_vars);
  p.var_upper.resize(p.num_vars);
  for (int j = 0; j < p.num_vars; ++j) {
    p.objective[j] = rng.uniform(-2.0, 2.0);
    p.var_lower[j] = rng.uniform(-3.0, 0.0);
    p.var_upper[j] = p.var_lower[j] + rng.uniform(0.5, 4.0);
  }
  p.ineq_matrix = peakmin::Matrix(m, p.num_vars);
  p.ineq_rhs.resize(m);
  std::vector<double> z0(p.num_vars);
  for (int j = 0; j < p.num_vars; ++j)
    z0[j] = rng.uniform(p.var_lower[j], p.var_upper[j]);
  for (int i = 0; i < m; ++i) {
    double act = 0.0;
    for (int j = 0; j < p.num_vars; ++j) {
      double a = rng.uniform(-2.0, 2.0);
      if (rng.bernoulli(0.15)) a = 0.0;
      p.ineq_matrix(i, j) = a;
      act += a * z0[j];
    }
    p.ineq_rhs[i] = act + rng.uniform(-0.2, 2.0);
    if (rng.bernoulli(0.08)) p.ineq_rhs[i] -= rng.uniform(2.0, 5.0);
  }
  return p;
}

}  // namespace lp_oracle
