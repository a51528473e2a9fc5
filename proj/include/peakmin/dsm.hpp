#pragma once

// Demand-side scenario builder. Each agent is a thermostatic load with
// first-order thermal dynamics dT/dt = -alpha (T - T_out) + Q x; sampling it
// under piecewise-constant x in [0,1] gives an affine recursion whose
// comfort-band constraints unroll into the agent's polytope.

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakmin/random.hpp"
#include "peakmin/subproblem.hpp"

namespace peakmin {

struct InfeasibleScenario : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How the outside temperature enters the sampled recursion. exact_zoh is
/// the zero-order-hold solution of the continuous model (the device relaxes
/// toward T_out); paper_literal flips that term's sign.
enum class SignConvention { exact_zoh, paper_literal };

inline const char* to_string(SignConvention c) {
  return c == SignConvention::exact_zoh ? "exact_zoh" : "paper_literal";
}

inline SignConvention parse_sign_convention(const std::string& s) {
  if (s == "exact_zoh") return SignConvention::exact_zoh;
  if (s == "paper_literal") return SignConvention::paper_literal;
  throw std::invalid_argument("unknown sign convention: " + s);
}

struct TclParams {
  double alpha = 0.0;      // thermal decay rate
  double Q = 0.0;          // input gain
  double delta_tau = 0.0;  // sampling interval
  double T0 = 0.0;         // initial temperature
  std::vector<double> T_out;
  double T_min = 0.0;
  double T_max = 0.0;
  int S = 0;
};

inline void validate_tcl(const TclParams& p) {
  if (p.S < 1) throw std::invalid_argument("S must be >= 1");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(p.Q > 0.0)) throw std::invalid_argument("Q must be positive");
  if (!(p.delta_tau > 0.0))
    throw std::invalid_argument("delta_tau must be positive");
  if (!(p.T_min < p.T_max))
    throw std::invalid_argument("T_min must be below T_max");
  if ((int)p.T_out.size() != p.S)
    throw std::invalid_argument("T_out length != S");
}

/// Sampled dynamics T_{s+1} = a T_s + b_u x_s + forcing_s.
struct AffineDynamics {
  double a = 0.0;
  double b_u = 0.0;
  std::vector<double> forcing;
};

inline AffineDynamics discretize(
    const TclParams& p, SignConvention conv = SignConvention::exact_zoh) {
  validate_tcl(p);
  AffineDynamics dyn;
  dyn.a = std::exp(-p.alpha * p.delta_tau);
  dyn.b_u = (1.0 - dyn.a) * p.Q / p.alpha;
  const double sign = conv == SignConvention::exact_zoh ? 1.0 : -1.0;
  dyn.forcing.resize(p.S);
  for (int s = 0; s < p.S; ++s)
    dyn.forcing[s] = sign * (1.0 - dyn.a) * p.T_out[s];
  return dyn;
}

/// Runs the recursion; returns T_1..T_S for the given profile x.
inline std::vector<double> simulate_temperatures(const AffineDynamics& dyn,
                                                 double T0,
                                                 const std::vector<double>& x) {
  const int S = (int)dyn.forcing.size();
  if ((int)x.size() != S) throw std::invalid_argument("x length != horizon");
  std::vector<double> T(S);
  double cur = T0;
  for (int s = 0; s < S; ++s) {
    cur = dyn.a * cur + dyn.b_u * x[s] + dyn.forcing[s];
    T[s] = cur;
  }
  return T;
}

/// Unrolls T_s = a^s T0 + sum_{k<s} a^{s-1-k} (b_u x_k + forcing_k) and
/// emits T_min <= T_s <= T_max for s = 1..S as 2S inequality rows over
/// x in [0,1]^S, unit cost per slot. Throws InfeasibleScenario when the
/// comfort band cannot be met.
inline LocalProblemData build_polytope(const AffineDynamics& dyn,
                                       const TclParams& p) {
  validate_tcl(p);
  const int S = p.S;
  if ((int)dyn.forcing.size() != S)
    throw std::invalid_argument("dynamics horizon != S");

  Matrix A(2 * S, S);
  std::vector<double> b(2 * S);
  std::vector<double> coef(S, 0.0);  // row coefficients for the current T_s
  double constant = p.T0;
  for (int s = 1; s <= S; ++s) {
    for (int k = 0; k < s - 1; ++k) coef[k] *= dyn.a;
    coef[s - 1] = dyn.b_u;
    constant = dyn.a * constant + dyn.forcing[s - 1];
    const int up_row = 2 * (s - 1), lo_row = up_row + 1;
    for (int k = 0; k < s; ++k) {
      A(up_row, k) = coef[k];
      A(lo_row, k) = -coef[k];
    }
    b[up_row] = p.T_max - constant;
    b[lo_row] = constant - p.T_min;
  }

  try {
    return make_local_data(S, std::vector<double>(S, 1.0), std::move(A),
                           std::move(b), std::vector<double>(S, 0.0),
                           std::vector<double>(S, 1.0));
  } catch (const std::runtime_error&) {
    throw InfeasibleScenario("comfort band unreachable for these parameters");
  }
}

// ---------------------------------------------------------------------------
// Scenario generation and serialization
// ---------------------------------------------------------------------------

/// Sampling ranges for agent parameters. The outside temperature is a
/// per-agent phase-shifted sinusoid t_out_mid + t_out_amp * sin.
struct ParamRanges {
  double alpha_min = 0.1, alpha_max = 0.5;
  double q_over_alpha_min = 20.0, q_over_alpha_max = 40.0;
  double delta_tau = 1.0;
  double t_out_mid = 7.5, t_out_amp = 7.5;
  double t_min = 18.0, t_max = 24.0;
  double t0_min = 18.0, t0_max = 24.0;
};

struct Scenario {
  int slot_count = 0;
  SignConvention convention = SignConvention::exact_zoh;
  std::vector<TclParams> agents;
};

inline TclParams sample_tcl(Rng& rng, int S, const ParamRanges& r) {
  TclParams p;
  p.S = S;
  p.alpha = rng.uniform(r.alpha_min, r.alpha_max);
  p.Q = p.alpha * rng.uniform(r.q_over_alpha_min, r.q_over_alpha_max);
  p.delta_tau = r.delta_tau;
  p.T0 = rng.uniform(r.t0_min, r.t0_max);
  p.T_min = r.t_min;
  p.T_max = r.t_max;
  const double phase = rng.uniform(0.0, 6.283185307179586);
  p.T_out.resize(S);
  for (int s = 0; s < S; ++s)
    p.T_out[s] =
        r.t_out_mid +
        r.t_out_amp * std::sin(6.283185307179586 * (s + 1) / S + phase);
  return p;
}

/// Samples feasible agents (bounded retries per agent), deterministic in
/// the seed. The returned scenario replays exactly via build_instance.
inline Scenario gen_scenario(int n_agents, int S, const ParamRanges& ranges,
                             std::uint64_t seed,
                             SignConvention conv = SignConvention::exact_zoh,
                             int max_retries = 50) {
  if (n_agents < 1) throw std::invalid_argument("n_agents must be >= 1");
  Scenario sc;
  sc.slot_count = S;
  sc.convention = conv;
  Rng rng(seed);
  for (int i = 0; i < n_agents; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < max_retries && !placed; ++attempt) {
      TclParams p = sample_tcl(rng, S, ranges);
      try {
        build_polytope(discretize(p, conv), p);
      } catch (const InfeasibleScenario&) {
        continue;
      }
      sc.agents.push_back(std::move(p));
      placed = true;
    }
    if (!placed)
      throw std::runtime_error(
          "exhausted retries sampling a feasible agent; widen the ranges");
  }
  return sc;
}

inline std::vector<LocalProblemData> build_instance(const Scenario& sc) {
  std::vector<LocalProblemData> out;
  out.reserve(sc.agents.size());
  for (const TclParams& p : sc.agents) {
    if (p.S != sc.slot_count)
      throw std::invalid_argument("agent horizon != scenario slot_count");
    out.push_back(build_polytope(discretize(p, sc.convention), p));
  }
  return out;
}

inline std::vector<LocalProblemData> gen_instance(
    int n_agents, int S, const ParamRanges& ranges, std::uint64_t seed,
    SignConvention conv = SignConvention::exact_zoh) {
  return build_instance(gen_scenario(n_agents, S, ranges, seed, conv));
}

/// Scenario JSON keeps full double precision so a dump/parse cycle
/// reproduces the instance bit for bit.
inline void write_scenario(std::ostream& out, const Scenario& sc) {
  nlohmann::json j;
  j["slot_count"] = sc.slot_count;
  j["sign_convention"] = to_string(sc.convention);
  j["agents"] = nlohmann::json::array();
  for (const TclParams& p : sc.agents) {
    j["agents"].push_back({{"alpha", p.alpha},
                           {"Q", p.Q},
                           {"delta_tau", p.delta_tau},
                           {"T0", p.T0},
                           {"T_min", p.T_min},
                           {"T_max", p.T_max},
                           {"T_out", p.T_out}});
  }
  out << j.dump(2) << "\n";
}

inline Scenario parse_scenario(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scenario JSON parse error: ") +
                             e.what());
  }
  Scenario sc;
  try {
    sc.slot_count = j.at("slot_count").get<int>();
    sc.convention =
        parse_sign_convention(j.at("sign_convention").get<std::string>());
    for (const auto& a : j.at("agents")) {
      TclParams p;
      p.S = sc.slot_count;
      p.alpha = a.at("alpha").get<double>();
      p.Q = a.at("Q").get<double>();
      p.delta_tau = a.at("delta_tau").get<double>();
      p.T0 = a.at("T0").get<double>();
      p.T_min = a.at("T_min").get<double>();
      p.T_max = a.at("T_max").get<double>();
      p.T_out = a.at("T_out").get<std::vector<double>>();
      validate_tcl(p);
      sc.agents.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scenario JSON schema error: ") +
                             e.what());
  }
  return sc;
}

}  // namespace peakmin
