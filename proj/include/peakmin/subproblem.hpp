#pragma once

// Local building blocks of the peak-minimization scheme: each agent owns a
// polytope of admissible consumption profiles and an affine per-slot cost.
// Everything here reduces to an LpProblem and reads the answer back.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peakmin/linprog.hpp"

namespace peakmin {

/// One agent's feasible set X = {x : poly_matrix x <= poly_rhs,
/// box_lower <= x <= box_upper} together with the per-slot cost
/// coefficients (slot cost is cost_coeffs[s] * x[s]).
struct LocalProblemData {
  int slot_count = 0;
  std::vector<double> cost_coeffs;
  Matrix poly_matrix;
  std::vector<double> poly_rhs;
  std::vector<double> box_lower;
  std::vector<double> box_upper;
};

/// Output of one local solve: profile x, its peak value rho, and the
/// multipliers mu of the peak constraints (a point on the unit simplex).
struct PrimalDualPair {
  std::vector<double> x;
  double rho = 0.0;
  std::vector<double> mu;
};

inline void check_dims(const LocalProblemData& d) {
  const int S = d.slot_count;
  if (S <= 0) throw std::invalid_argument("slot_count must be positive");
  if ((int)d.cost_coeffs.size() != S)
    throw std::invalid_argument("cost_coeffs length != slot_count");
  if ((int)d.box_lower.size() != S || (int)d.box_upper.size() != S)
    throw std::invalid_argument("box bounds length != slot_count");
  if (d.poly_matrix.cols != S)
    throw std::invalid_argument("poly_matrix column count != slot_count");
  if (d.poly_matrix.rows != (int)d.poly_rhs.size())
    throw std::invalid_argument("poly_rhs length != poly_matrix rows");
  for (int s = 0; s < S; ++s) {
    if (!(d.box_lower[s] <= d.box_upper[s]))
      throw std::invalid_argument("box_lower > box_upper");
    if (!std::isfinite(d.box_lower[s]) || !std::isfinite(d.box_upper[s]))
      throw std::invalid_argument("box bounds must be finite (compact X)");
  }
}

/// Largest constraint violation of x against the polytope and box.
inline double feasibility_violation(const LocalProblemData& d,
                                    const std::vector<double>& x) {
  check_dims(d);
  if ((int)x.size() != d.slot_count)
    throw std::invalid_argument("x length != slot_count");
  double worst = 0.0;
  for (int s = 0; s < d.slot_count; ++s) {
    worst = std::max(worst, d.box_lower[s] - x[s]);
    worst = std::max(worst, x[s] - d.box_upper[s]);
  }
  for (int r = 0; r < d.poly_matrix.rows; ++r) {
    double lhs = 0.0;
    for (int s = 0; s < d.slot_count; ++s) lhs += d.poly_matrix(r, s) * x[s];
    worst = std::max(worst, lhs - d.poly_rhs[r]);
  }
  return worst;
}

/// Constructs LocalProblemData and verifies X is nonempty with a
/// feasibility LP. Throws on dimension errors or an empty set.
inline LocalProblemData make_local_data(int slot_count,
                                        std::vector<double> cost_coeffs,
                                        Matrix poly_matrix,
                                        std::vector<double> poly_rhs,
                                        std::vector<double> box_lower,
                                        std::vector<double> box_upper) {
  LocalProblemData d;
  d.slot_count = slot_count;
  d.cost_coeffs = std::move(cost_coeffs);
  d.poly_matrix = std::move(poly_matrix);
  d.poly_rhs = std::move(poly_rhs);
  d.box_lower = std::move(box_lower);
  d.box_upper = std::move(box_upper);
  check_dims(d);

  LpProblem probe;
  probe.num_vars = d.slot_count;
  probe.objective.assign(d.slot_count, 0.0);
  probe.ineq_matrix = d.poly_matrix;
  probe.ineq_rhs = d.poly_rhs;
  probe.var_lower = d.box_lower;
  probe.var_upper = d.box_upper;
  if (solve(probe).status != LpStatus::Optimal)
    throw std::runtime_error("local feasible set is empty");
  return d;
}

/// Unit box with unit costs, no extra rows.
inline LocalProblemData default_box_data(int slot_count) {
  return make_local_data(slot_count, std::vector<double>(slot_count, 1.0),
                         Matrix(0, slot_count), {},
                         std::vector<double>(slot_count, 0.0),
                         std::vector<double>(slot_count, 1.0));
}

// ---------------------------------------------------------------------------
// Local peak subproblem
// ---------------------------------------------------------------------------

/// LP over (x, rho): minimize rho subject to x in X and, per slot s,
/// cost_s * x_s + delta_lambda_s <= rho. The S peak rows come first so the
/// caller can read mu straight out of ineq_duals[0..S).
inline LpProblem build_local(const LocalProblemData& d,
                             const std::vector<double>& delta_lambda) {
  check_dims(d);
  const int S = d.slot_count;
  if ((int)delta_lambda.size() != S)
    throw std::invalid_argument("delta_lambda length != slot_count");

  LpProblem p;
  p.num_vars = S + 1;  // x_0..x_{S-1}, rho
  p.objective.assign(S + 1, 0.0);
  p.objective[S] = 1.0;

  const int rows = S + d.poly_matrix.rows;
  p.ineq_matrix = Matrix(rows, S + 1);
  p.ineq_rhs.assign(rows, 0.0);
  for (int s = 0; s < S; ++s) {
    p.ineq_matrix(s, s) = d.cost_coeffs[s];
    p.ineq_matrix(s, S) = -1.0;
    p.ineq_rhs[s] = -delta_lambda[s];
  }
  for (int r = 0; r < d.poly_matrix.rows; ++r) {
    for (int s = 0; s < S; ++s)
      p.ineq_matrix(S + r, s) = d.poly_matrix(r, s);
    p.ineq_rhs[S + r] = d.poly_rhs[r];
  }

  p.var_lower = d.box_lower;
  p.var_upper = d.box_upper;
  p.var_lower.push_back(-kInf);
  p.var_upper.push_back(kInf);
  return p;
}

inline PrimalDualPair solve_local(const LocalProblemData& d,
                                  const std::vector<double>& delta_lambda) {
  LpProblem p = build_local(d, delta_lambda);
  LpSolution s = solve(p);
  if (s.status != LpStatus::Optimal)
    throw std::runtime_error("local subproblem solve failed with status " +
                             std::string(to_string(s.status)));
  const int S = d.slot_count;
  PrimalDualPair pair;
  pair.x.assign(s.primal.begin(), s.primal.begin() + S);
  pair.rho = s.primal[S];
  pair.mu.assign(s.ineq_duals.begin(), s.ineq_duals.begin() + S);
  return pair;
}

// ---------------------------------------------------------------------------
// Diagnostics: the dual function pieces
// ---------------------------------------------------------------------------

struct QiResult {
  double value = 0.0;
  std::vector<double> argmin;
};

/// q(mu) = min over X of sum_s mu_s * cost_s * x_s, for mu on the unit
/// simplex. Returns the value and one minimizer.
inline QiResult eval_qi(const LocalProblemData& d,
                        const std::vector<double>& mu) {
  check_dims(d);
  const int S = d.slot_count;
  if ((int)mu.size() != S)
    throw std::invalid_argument("mu length != slot_count");
  double sum = 0.0;
  for (double m : mu) {
    if (m < -1e-9) throw std::invalid_argument("mu has negative entries");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-7)
    throw std::invalid_argument("mu does not sum to 1");

  LpProblem p;
  p.num_vars = S;
  p.objective.resize(S);
  for (int s = 0; s < S; ++s) p.objective[s] = mu[s] * d.cost_coeffs[s];
  p.ineq_matrix = d.poly_matrix;
  p.ineq_rhs = d.poly_rhs;
  p.var_lower = d.box_lower;
  p.var_upper = d.box_upper;
  LpSolution s = solve(p);
  if (s.status != LpStatus::Optimal)
    throw std::runtime_error("q evaluation failed with status " +
                             std::string(to_string(s.status)));
  return {s.objective_value, s.primal};
}

/// eta(delta_lambda) = max over the simplex of q(mu) + mu' delta_lambda,
/// which coincides with the rho of the local peak subproblem.
inline double eval_eta_i(const LocalProblemData& d,
                         const std::vector<double>& delta_lambda) {
  return solve_local(d, delta_lambda).rho;
}

// ---------------------------------------------------------------------------
// Centralized oracle
// ---------------------------------------------------------------------------

struct CentralizedSolution {
  double p_star = 0.0;
  std::vector<std::vector<double>> x;  // one profile per agent
};

/// Joint epigraph LP: minimize P subject to x^i in X_i for every agent and
/// sum_i cost^i_s x^i_s <= P per slot. Ground truth for the distributed run.
inline CentralizedSolution solve_centralized(
    const std::vector<LocalProblemData>& instance) {
  if (instance.empty()) throw std::invalid_argument("no agents");
  const int N = (int)instance.size();
  const int S = instance[0].slot_count;
  int poly_rows = 0;
  for (const auto& d : instance) {
    check_dims(d);
    if (d.slot_count != S)
      throw std::invalid_argument("agents disagree on slot_count");
    poly_rows += d.poly_matrix.rows;
  }

  LpProblem p;
  p.num_vars = N * S + 1;  // agent blocks then P
  const int P = N * S;
  p.objective.assign(p.num_vars, 0.0);
  p.objective[P] = 1.0;

  p.ineq_matrix = Matrix(S + poly_rows, p.num_vars);
  p.ineq_rhs.assign(S + poly_rows, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < N; ++i)
      p.ineq_matrix(s, i * S + s) = instance[i].cost_coeffs[s];
    p.ineq_matrix(s, P) = -1.0;
  }
  int row = S;
  for (int i = 0; i < N; ++i) {
    const Matrix& A = instance[i].poly_matrix;
    for (int r = 0; r < A.rows; ++r, ++row) {
      for (int s = 0; s < S; ++s) p.ineq_matrix(row, i * S + s) = A(r, s);
      p.ineq_rhs[row] = instance[i].poly_rhs[r];
    }
  }

  p.var_lower.reserve(p.num_vars);
  p.var_upper.reserve(p.num_vars);
  for (int i = 0; i < N; ++i) {
    p.var_lower.insert(p.var_lower.end(), instance[i].box_lower.begin(),
                       instance[i].box_lower.end());
    p.var_upper.insert(p.var_upper.end(), instance[i].box_upper.begin(),
                       instance[i].box_upper.end());
  }
  p.var_lower.push_back(-kInf);
  p.var_upper.push_back(kInf);

  LpSolution s = solve(p);
  if (s.status != LpStatus::Optimal)
    throw std::runtime_error("centralized solve failed with status " +
                             std::string(to_string(s.status)));
  CentralizedSolution out;
  out.p_star = s.objective_value;
  out.x.resize(N);
  for (int i = 0; i < N; ++i)
    out.x[i].assign(s.primal.begin() + i * S, s.primal.begin() + (i + 1) * S);
  return out;
}

}  // namespace peakmin
