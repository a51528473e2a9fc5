#pragma once

// Per-node state and the two steps each node runs every round: solve the
// local peak subproblem against the current edge multipliers, then move the
// multipliers along the disagreement of the peak duals.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakmin/subproblem.hpp"

namespace peakmin {

/// Diminishing step size gamma(t) = scale * (1/t)^exponent. The exponent
/// window (0.5, 1] makes the sequence non-summable but square-summable.
struct StepSchedule {
  enum class Kind { power_law };
  Kind kind = Kind::power_law;
  double exponent = 0.8;
  double scale = 1.0;
};

inline double step_size(const StepSchedule& sched, int t) {
  if (sched.kind != StepSchedule::Kind::power_law)
    throw std::invalid_argument("unknown schedule kind");
  if (!(sched.exponent > 0.5 && sched.exponent <= 1.0))
    throw std::invalid_argument("schedule exponent must lie in (0.5, 1]");
  if (!(sched.scale > 0.0))
    throw std::invalid_argument("schedule scale must be positive");
  if (t < 1) throw std::invalid_argument("round index starts at 1");
  return sched.scale * std::pow(1.0 / (double)t, sched.exponent);
}

/// Everything node i owns: its feasible set and costs, one multiplier
/// vector lambda[j] per neighbor j, and the latest local solve.
struct NodeState {
  int node_id = 0;  // 1-based
  LocalProblemData local_data;
  std::map<int, std::vector<double>> lambda;
  PrimalDualPair last_pair;
  bool solved_once = false;
};

inline NodeState make_node_state(int node_id, LocalProblemData data,
                                 const std::vector<int>& neighbor_ids) {
  NodeState st;
  st.node_id = node_id;
  st.local_data = std::move(data);
  for (int j : neighbor_ids)
    st.lambda[j] = std::vector<double>(st.local_data.slot_count, 0.0);
  return st;
}

namespace detail {

template <typename T>
inline void require_neighbor_cover(const NodeState& st,
                                   const std::map<int, T>& incoming,
                                   const char* what) {
  if (incoming.size() != st.lambda.size())
    throw std::runtime_error(std::string(what) + ": expected " +
                             std::to_string(st.lambda.size()) +
                             " neighbor messages, got " +
                             std::to_string(incoming.size()));
  for (const auto& [j, _] : st.lambda)
    if (!incoming.count(j))
      throw std::runtime_error(std::string(what) + ": missing message from " +
                               std::to_string(j));
}

}  // namespace detail

/// One solve step: assemble delta_lambda_s = sum_j (lambda[j] -
/// incoming_lambda[j])_s, solve the local subproblem, cache and return the
/// result. incoming_lambda[j] is the vector neighbor j keeps for this node.
inline PrimalDualPair node_solve(
    NodeState& st, const std::map<int, std::vector<double>>& incoming_lambda) {
  detail::require_neighbor_cover(st, incoming_lambda, "node_solve");
  const int S = st.local_data.slot_count;
  std::vector<double> delta(S, 0.0);
  for (const auto& [j, mine] : st.lambda) {
    const std::vector<double>& theirs = incoming_lambda.at(j);
    if ((int)theirs.size() != S)
      throw std::runtime_error("node_solve: bad message length from " +
                               std::to_string(j));
    for (int s = 0; s < S; ++s) delta[s] += mine[s] - theirs[s];
  }
  st.last_pair = solve_local(st.local_data, delta);
  st.solved_once = true;
  return st.last_pair;
}

/// One update step: lambda[j] -= gamma * (mu_self - mu_j) for every
/// neighbor j, using the mu cached by the latest node_solve.
inline void lambda_update(NodeState& st,
                          const std::map<int, std::vector<double>>& incoming_mu,
                          double gamma) {
  if (!st.solved_once)
    throw std::runtime_error("lambda_update before any node_solve");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  detail::require_neighbor_cover(st, incoming_mu, "lambda_update");
  const int S = st.local_data.slot_count;
  for (auto& [j, lam] : st.lambda) {
    const std::vector<double>& mu_j = incoming_mu.at(j);
    if ((int)mu_j.size() != S)
      throw std::runtime_error("lambda_update: bad message length from " +
                               std::to_string(j));
    for (int s = 0; s < S; ++s)
      lam[s] -= gamma * (st.last_pair.mu[s] - mu_j[s]);
  }
}

}  // namespace peakmin
