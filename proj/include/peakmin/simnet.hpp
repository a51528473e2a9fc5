#pragma once

// Synchronous round-based driver. Each round: deliver multiplier messages,
// solve every node, deliver the resulting peak duals, step the multipliers.
// Records a metrics trace and can verify the run's structural invariants.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "peakmin/graph.hpp"
#include "peakmin/protocol.hpp"

namespace peakmin {

struct RunConfig {
  int max_rounds = 1000;
  StepSchedule schedule{};
  double epsilon_consensus = 1e-6;
  int record_every = 1;
  std::uint64_t seed = 0;  // provenance only; the run itself is deterministic
  bool compute_oracle = false;
  int num_threads = 1;
  bool check_invariants = false;
};

struct TraceRow {
  int t = 0;
  std::vector<double> rho;
  double sum_rho = 0.0;
  double cost_error = 0.0;  // NaN when no oracle
  double consensus_residual = 0.0;
  std::vector<double> aggregate_profile;
};

/// Worst observed violation of each structural invariant over a whole run.
/// Populated only when RunConfig::check_invariants is set.
struct InvariantStats {
  bool checked = false;
  double mu_simplex = 0.0;       // |sum(mu)-1| and negative parts
  double lambda_antisymmetry = 0.0;
  double telescoping = 0.0;      // per-slot sum of all delta_lambda
  double x_infeasibility = 0.0;
  double eta_gap = 0.0;          // |rho_i - eta_i(lambda)|
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<std::vector<double>> final_x;
  std::vector<double> final_rho;
  double p_star = 0.0;
  bool has_oracle = false;
  int rounds_executed = 0;
  bool stopped_by_consensus = false;
  double wall_seconds = 0.0;
  int n_agents = 0;
  int slot_count = 0;
  std::uint64_t seed = 0;
  InvariantStats invariants;
};

/// Largest disagreement between neighboring peak duals; zero without edges.
inline double consensus_residual(const std::vector<NodeState>& states,
                                 const Graph& graph) {
  double worst = 0.0;
  for (auto [i, j] : graph.edges) {
    const std::vector<double>& mi = states[i - 1].last_pair.mu;
    const std::vector<double>& mj = states[j - 1].last_pair.mu;
    for (std::size_t s = 0; s < mi.size(); ++s)
      worst = std::max(worst, std::abs(mi[s] - mj[s]));
  }
  return worst;
}

namespace detail {

template <typename Fn>
inline void fan_out(int n, int num_threads, Fn&& body) {
  if (num_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = std::min(num_threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline void acc(double& slot, double v) { slot = std::max(slot, v); }

}  // namespace detail

inline Trace run(const std::vector<LocalProblemData>& instance,
                 const Graph& graph, const RunConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = (int)instance.size();
  if (N != graph.n_nodes)
    throw std::invalid_argument("agent count != graph node count");
  if (config.max_rounds < 1 || config.record_every < 1)
    throw std::invalid_argument("max_rounds and record_every must be >= 1");
  const int S = instance.empty() ? 0 : instance[0].slot_count;
  for (const auto& d : instance) {
    check_dims(d);
    if (d.slot_count != S)
      throw std::invalid_argument("agents disagree on slot_count");
  }

  Trace trace;
  trace.n_agents = N;
  trace.slot_count = S;
  trace.seed = config.seed;
  if (config.compute_oracle) {
    trace.p_star = solve_centralized(instance).p_star;
    trace.has_oracle = true;
  }

  std::vector<NodeState> states;
  states.reserve(N);
  for (int i = 1; i <= N; ++i)
    states.push_back(make_node_state(i, instance[i - 1], neighbors(graph, i)));

  int consensus_streak = 0;
  for (int t = 1; t <= config.max_rounds; ++t) {
    // (1) Deliver multiplier messages: node i receives neighbor j's copy.
    std::vector<std::map<int, std::vector<double>>> inbox_lambda(N);
    for (int i = 1; i <= N; ++i)
      for (const auto& [j, _] : states[i - 1].lambda)
        inbox_lambda[i - 1][j] = states[j - 1].lambda.at(i);

    // (2) All nodes solve.
    std::vector<std::string> failures(N);
    detail::fan_out(N, config.num_threads, [&](int idx) {
      try {
        node_solve(states[idx], inbox_lambda[idx]);
      } catch (const std::exception& e) {
        failures[idx] = e.what();
      }
    });
    for (int idx = 0; idx < N; ++idx)
      if (!failures[idx].empty())
        throw std::runtime_error("round " + std::to_string(t) + ", node " +
                                 std::to_string(idx + 1) + ": " +
                                 failures[idx]);

    if (config.check_invariants) {
      InvariantStats& inv = trace.invariants;
      inv.checked = true;
      std::vector<double> telescope(S, 0.0);
      for (int idx = 0; idx < N; ++idx) {
        const NodeState& st = states[idx];
        double sum = 0.0;
        for (double m : st.last_pair.mu) {
          detail::acc(inv.mu_simplex, -m);
          sum += m;
        }
        detail::acc(inv.mu_simplex, std::abs(sum - 1.0));
        detail::acc(inv.x_infeasibility,
                    feasibility_violation(st.local_data, st.last_pair.x));
        std::vector<double> delta(S, 0.0);
        for (const auto& [j, mine] : st.lambda) {
          const std::vector<double>& theirs = inbox_lambda[idx].at(j);
          for (int s = 0; s < S; ++s) delta[s] += mine[s] - theirs[s];
        }
        for (int s = 0; s < S; ++s) telescope[s] += delta[s];
        detail::acc(inv.eta_gap, std::abs(eval_eta_i(st.local_data, delta) -
                                          st.last_pair.rho));
      }
      for (int s = 0; s < S; ++s)
        detail::acc(inv.telescoping, std::abs(telescope[s]));
    }

    // (3) Deliver the peak duals.
    std::vector<std::map<int, std::vector<double>>> inbox_mu(N);
    for (int i = 1; i <= N; ++i)
      for (const auto& [j, _] : states[i - 1].lambda)
        inbox_mu[i - 1][j] = states[j - 1].last_pair.mu;

    // (4) Step the multipliers.
    const double gamma = step_size(config.schedule, t);
    detail::fan_out(N, config.num_threads, [&](int idx) {
      lambda_update(states[idx], inbox_mu[idx], gamma);
    });

    if (config.check_invariants) {
      for (auto [i, j] : graph.edges) {
        const auto& lij = states[i - 1].lambda.at(j);
        const auto& lji = states[j - 1].lambda.at(i);
        for (int s = 0; s < S; ++s)
          detail::acc(trace.invariants.lambda_antisymmetry,
                      std::abs(lij[s] + lji[s]));
      }
    }

    const double residual = consensus_residual(states, graph);
    consensus_streak = residual < config.epsilon_consensus
                           ? consensus_streak + 1
                           : 0;
    const bool stopping =
        t == config.max_rounds || consensus_streak >= 10;

    if (t == 1 || t % config.record_every == 0 || stopping) {
      TraceRow row;
      row.t = t;
      row.rho.resize(N);
      row.aggregate_profile.assign(S, 0.0);
      for (int idx = 0; idx < N; ++idx) {
        row.rho[idx] = states[idx].last_pair.rho;
        row.sum_rho += row.rho[idx];
        for (int s = 0; s < S; ++s)
          row.aggregate_profile[s] += instance[idx].cost_coeffs[s] *
                                      states[idx].last_pair.x[s];
      }
      row.cost_error = trace.has_oracle
                           ? std::abs(row.sum_rho - trace.p_star)
                           : std::numeric_limits<double>::quiet_NaN();
      row.consensus_residual = residual;
      trace.rows.push_back(std::move(row));
    }

    trace.rounds_executed = t;
    if (stopping) {
      trace.stopped_by_consensus = consensus_streak >= 10;
      break;
    }
  }

  trace.final_x.resize(N);
  trace.final_rho.resize(N);
  for (int idx = 0; idx < N; ++idx) {
    trace.final_x[idx] = states[idx].last_pair.x;
    trace.final_rho[idx] = states[idx].last_pair.rho;
  }
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return trace;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

/// 12 significant digits, the precision contract for all emitted numbers.
inline std::string num12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(num12(v).c_str(), nullptr);
}

}  // namespace detail

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,sum_rho,cost_error,consensus_residual";
  for (int i = 1; i <= trace.n_agents; ++i) out << ",rho_" << i;
  out << "\n";
  for (const TraceRow& row : trace.rows) {
    out << row.t << ',' << detail::num12(row.sum_rho) << ','
        << detail::num12(row.cost_error) << ','
        << detail::num12(row.consensus_residual);
    for (double r : row.rho) out << ',' << detail::num12(r);
    out << "\n";
  }
}

inline void write_profile_csv(std::ostream& out, const Trace& trace,
                              const std::vector<LocalProblemData>& instance) {
  out << "slot,aggregate";
  for (int i = 1; i <= trace.n_agents; ++i) out << ",agent_" << i;
  out << "\n";
  for (int s = 0; s < trace.slot_count; ++s) {
    double aggregate = 0.0;
    for (int i = 0; i < trace.n_agents; ++i)
      aggregate += instance[i].cost_coeffs[s] * trace.final_x[i][s];
    out << (s + 1) << ',' << detail::num12(aggregate);
    for (int i = 0; i < trace.n_agents; ++i)
      out << ',' << detail::num12(trace.final_x[i][s]);
    out << "\n";
  }
}

inline void write_summary_json(std::ostream& out, const Trace& trace,
                               const RunConfig& config) {
  nlohmann::json j;
  j["n_agents"] = trace.n_agents;
  j["slot_count"] = trace.slot_count;
  j["rounds_executed"] = trace.rounds_executed;
  j["stopped_by_consensus"] = trace.stopped_by_consensus;
  j["wall_seconds"] = detail::round12(trace.wall_seconds);
  j["seed"] = trace.seed;
  j["schedule"] = {{"kind", "power_law"},
                   {"exponent", config.schedule.exponent},
                   {"scale", config.schedule.scale}};
  j["max_rounds"] = config.max_rounds;
  j["record_every"] = config.record_every;
  j["epsilon_consensus"] = config.epsilon_consensus;
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    j["sum_rho_final"] = detail::round12(last.sum_rho);
    j["consensus_residual_final"] = detail::round12(last.consensus_residual);
  }
  if (trace.has_oracle) {
    j["p_star"] = detail::round12(trace.p_star);
    if (!trace.rows.empty())
      j["cost_error_final"] = detail::round12(trace.rows.back().cost_error);
  } else {
    j["p_star"] = nullptr;
  }
  if (trace.invariants.checked) {
    const InvariantStats& inv = trace.invariants;
    j["invariants"] = {{"mu_simplex", detail::round12(inv.mu_simplex)},
                       {"lambda_antisymmetry",
                        detail::round12(inv.lambda_antisymmetry)},
                       {"telescoping", detail::round12(inv.telescoping)},
                       {"x_infeasibility", detail::round12(inv.x_infeasibility)},
                       {"eta_gap", detail::round12(inv.eta_gap)}};
  }
  out << j.dump(2) << "\n";
}

}  // namespace peakmin
