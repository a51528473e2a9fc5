// Experiment runner for the distributed peak-minimization library.
// Subcommands: run, validate, gen-scenario, gen-graph.
//
// Exit codes: 0 success, 2 bad usage or inconsistent configuration,
// 3 file I/O failure, 4 infeasible scenario, 5 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "peakmin/dsm.hpp"
#include "peakmin/simnet.hpp"

namespace fs = std::filesystem;
using namespace peakmin;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitSolver = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num12(double v) { return detail::num12(v); }

// ---------------------------------------------------------------------------
// Shared option plumbing
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string scenario_file;
  int agents = 0;
  int slots = 0;
  std::string convention = "exact_zoh";
  std::string graph_spec = "er:0.2";  // er:P | path | complete
  std::string graph_file;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> scenario_seed;
  std::optional<std::uint64_t> graph_seed;
  int rounds = 1000;
  std::string step = "pow:0.8";
  double step_scale = 1.0;
  double eps_consensus = 1e-6;
  int record_every = 1;
  bool oracle = false;
  int threads = 1;
  bool check_invariants = false;
  std::string out_dir = ".";
  std::string config_file;
};

StepSchedule parse_step(const std::string& spec, double scale) {
  if (spec.rfind("pow:", 0) != 0)
    throw UsageError("--step must look like pow:<exponent>");
  StepSchedule sched;
  sched.kind = StepSchedule::Kind::power_law;
  try {
    sched.exponent = std::stod(spec.substr(4));
  } catch (const std::exception&) {
    throw UsageError("could not parse step exponent in '" + spec + "'");
  }
  sched.scale = scale;
  step_size(sched, 1);  // validates exponent and scale
  return sched;
}

Graph load_or_gen_graph(const RunOptions& opt, int n_agents) {
  if (!opt.graph_file.empty()) {
    std::ifstream in(opt.graph_file);
    if (!in) throw IoError("cannot open graph file " + opt.graph_file);
    return parse_edge_list(in);
  }
  const std::uint64_t seed = opt.graph_seed.value_or(opt.seed + 1);
  if (opt.graph_spec.rfind("er:", 0) == 0) {
    double p;
    try {
      p = std::stod(opt.graph_spec.substr(3));
    } catch (const std::exception&) {
      throw UsageError("could not parse edge probability in '" +
                       opt.graph_spec + "'");
    }
    return gen_erdos_renyi(n_agents, p, seed);
  }
  if (opt.graph_spec == "path") return path_graph(n_agents);
  if (opt.graph_spec == "complete") return complete_graph(n_agents);
  throw UsageError("--graph must be er:<p>, path, or complete");
}

Scenario load_or_gen_scenario(const RunOptions& opt) {
  if (!opt.scenario_file.empty()) {
    std::ifstream in(opt.scenario_file);
    if (!in) throw IoError("cannot open scenario file " + opt.scenario_file);
    return parse_scenario(in);
  }
  if (opt.agents < 1 || opt.slots < 1)
    throw UsageError("provide --scenario FILE or both --agents and --slots");
  return gen_scenario(opt.agents, opt.slots, ParamRanges{},
                      opt.scenario_seed.value_or(opt.seed),
                      parse_sign_convention(opt.convention));
}

void apply_config_file(RunOptions& opt, const CLI::App& cmd) {
  std::ifstream in(opt.config_file);
  if (!in) throw IoError("cannot open config file " + opt.config_file);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config JSON parse error: ") + e.what());
  }
  // Explicit command-line flags win over config-file values.
  auto absent = [&](const char* flag) { return cmd.count(flag) == 0; };
  auto take = [&](const char* key, const char* flag, auto& slot) {
    if (j.contains(key) && absent(flag))
      slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  take("scenario", "--scenario", opt.scenario_file);
  take("agents", "--agents", opt.agents);
  take("slots", "--slots", opt.slots);
  take("convention", "--convention", opt.convention);
  take("graph", "--graph", opt.graph_spec);
  take("graph_file", "--graph-file", opt.graph_file);
  take("seed", "--seed", opt.seed);
  take("rounds", "--rounds", opt.rounds);
  take("step", "--step", opt.step);
  take("step_scale", "--step-scale", opt.step_scale);
  take("epsilon_consensus", "--eps-consensus", opt.eps_consensus);
  take("record_every", "--record-every", opt.record_every);
  take("oracle", "--oracle", opt.oracle);
  take("threads", "--threads", opt.threads);
  take("check_invariants", "--check-invariants", opt.check_invariants);
  take("out", "--out", opt.out_dir);
  if (j.contains("scenario_seed") && absent("--scenario-seed"))
    opt.scenario_seed = j.at("scenario_seed").get<std::uint64_t>();
  if (j.contains("graph_seed") && absent("--graph-seed"))
    opt.graph_seed = j.at("graph_seed").get<std::uint64_t>();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// Figure data emission
// ---------------------------------------------------------------------------

void emit_figures_data(const fs::path& dir, const Trace& trace,
                       const std::vector<LocalProblemData>& instance) {
  {
    auto out = open_out(dir / "fig1.csv");
    out << "t";
    for (int i = 1; i <= trace.n_agents; ++i) out << ",rho_" << i;
    out << ",sum_rho,p_star\n";
    for (const TraceRow& row : trace.rows) {
      out << row.t;
      for (double r : row.rho) out << ',' << num12(r);
      out << ',' << num12(row.sum_rho) << ','
          << num12(trace.has_oracle
                       ? trace.p_star
                       : std::numeric_limits<double>::quiet_NaN())
          << "\n";
    }
  }
  {
    auto out = open_out(dir / "fig2.csv");
    out << "slot";
    for (int i = 1; i <= trace.n_agents; ++i) out << ",x_" << i;
    out << ",aggregate\n";
    for (int s = 0; s < trace.slot_count; ++s) {
      out << (s + 1);
      double aggregate = 0.0;
      for (int i = 0; i < trace.n_agents; ++i) {
        out << ',' << num12(trace.final_x[i][s]);
        aggregate += instance[i].cost_coeffs[s] * trace.final_x[i][s];
      }
      out << ',' << num12(aggregate) << "\n";
    }
  }
  if (!trace.has_oracle) {
    std::cerr << "warning: no oracle value, skipping fig3.csv\n";
    return;
  }
  auto out = open_out(dir / "fig3.csv");
  out << "t,cost_error\n";
  for (const TraceRow& row : trace.rows)
    out << row.t << ',' << num12(std::max(row.cost_error, 1e-16)) << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int do_run(const RunOptions& opt) {
  Scenario sc = load_or_gen_scenario(opt);
  std::vector<LocalProblemData> instance = build_instance(sc);
  Graph graph = load_or_gen_graph(opt, (int)instance.size());
  if (graph.n_nodes != (int)instance.size())
    throw UsageError("graph has " + std::to_string(graph.n_nodes) +
                     " nodes but the scenario has " +
                     std::to_string(instance.size()) + " agents");
  if (!is_connected(graph))
    throw UsageError("graph is not connected");

  RunConfig cfg;
  cfg.max_rounds = opt.rounds;
  cfg.schedule = parse_step(opt.step, opt.step_scale);
  cfg.epsilon_consensus = opt.eps_consensus;
  cfg.record_every = opt.record_every;
  cfg.seed = opt.seed;
  cfg.compute_oracle = opt.oracle;
  cfg.num_threads = opt.threads;
  cfg.check_invariants = opt.check_invariants;

  Trace trace = run(instance, graph, cfg);

  const fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  { auto out = open_out(dir / "trace.csv"); write_trace_csv(out, trace); }
  {
    auto out = open_out(dir / "profile.csv");
    write_profile_csv(out, trace, instance);
  }
  {
    auto out = open_out(dir / "summary.json");
    write_summary_json(out, trace, cfg);
  }
  { auto out = open_out(dir / "scenario.json"); write_scenario(out, sc); }
  { auto out = open_out(dir / "graph.txt"); write_edge_list(out, graph); }
  emit_figures_data(dir, trace, instance);

  std::cout << "rounds executed: " << trace.rounds_executed << "\n";
  if (trace.has_oracle) {
    std::cout << "P*: " << num12(trace.p_star) << "\n";
    std::cout << "final cost error: " << num12(trace.rows.back().cost_error)
              << "\n";
  }
  std::cout << "final sum of peaks: " << num12(trace.rows.back().sum_rho)
            << "\n";
  std::cout << "outputs in " << dir.string() << "\n";
  return 0;
}

int do_validate(const std::string& scenario_file) {
  std::ifstream in(scenario_file);
  if (!in) throw IoError("cannot open scenario file " + scenario_file);
  Scenario sc = parse_scenario(in);
  int bad = 0;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    bool ok = true;
    try {
      build_polytope(discretize(sc.agents[i], sc.convention), sc.agents[i]);
    } catch (const InfeasibleScenario&) {
      ok = false;
      ++bad;
    }
    std::cout << "agent " << (i + 1) << ": "
              << (ok ? "feasible" : "infeasible") << "\n";
  }
  if (bad) {
    std::cerr << bad << " of " << sc.agents.size()
              << " agents are infeasible\n";
    return kExitInfeasible;
  }
  std::cout << "all " << sc.agents.size() << " agents feasible\n";
  return 0;
}

int do_gen_scenario(int agents, int slots, std::uint64_t seed,
                    const std::string& convention, const std::string& out) {
  Scenario sc = gen_scenario(agents, slots, ParamRanges{}, seed,
                             parse_sign_convention(convention));
  auto file = open_out(out);
  write_scenario(file, sc);
  std::cout << "wrote " << agents << "-agent scenario to " << out << "\n";
  return 0;
}

int do_gen_graph(int nodes, const std::string& kind, double p,
                 std::uint64_t seed, const std::string& out) {
  Graph g;
  if (kind == "er")
    g = gen_erdos_renyi(nodes, p, seed);
  else if (kind == "path")
    g = path_graph(nodes);
  else if (kind == "complete")
    g = complete_graph(nodes);
  else
    throw UsageError("--kind must be er, path, or complete");
  auto file = open_out(out);
  write_edge_list(file, g);
  std::cout << "wrote " << kind << " graph with " << g.edges.size()
            << " edges to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed peak minimization over a network of agents"};
  app.require_subcommand(1);

  RunOptions ro;
  CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment");
  run_cmd->add_option("--scenario", ro.scenario_file, "scenario JSON to load");
  run_cmd->add_option("--agents", ro.agents, "agents to generate");
  run_cmd->add_option("--slots", ro.slots, "slots per generated agent");
  run_cmd->add_option("--convention", ro.convention,
                      "exact_zoh or paper_literal (generated scenarios)");
  run_cmd->add_option("--graph", ro.graph_spec, "er:<p>, path, or complete")
      ->capture_default_str();
  run_cmd->add_option("--graph-file", ro.graph_file, "edge list to load");
  run_cmd->add_option("--seed", ro.seed, "master seed");
  run_cmd->add_option("--scenario-seed", ro.scenario_seed,
                      "override scenario seed (default: master seed)");
  run_cmd->add_option("--graph-seed", ro.graph_seed,
                      "override graph seed (default: master seed + 1)");
  run_cmd->add_option("--rounds", ro.rounds, "maximum rounds");
  run_cmd->add_option("--step", ro.step, "step schedule, pow:<exponent>");
  run_cmd->add_option("--step-scale", ro.step_scale, "step size multiplier");
  run_cmd->add_option("--eps-consensus", ro.eps_consensus,
                      "early-stop consensus threshold");
  run_cmd->add_option("--record-every", ro.record_every, "trace cadence");
  run_cmd->add_flag("--oracle", ro.oracle,
                    "compute the centralized optimum and cost errors");
  run_cmd->add_option("--threads", ro.threads, "solver worker threads");
  run_cmd->add_flag("--check-invariants", ro.check_invariants,
                    "verify structural invariants every round");
  run_cmd->add_option("--out", ro.out_dir, "output directory");
  run_cmd->add_option("--config", ro.config_file,
                      "JSON file with the same knobs (flags win)");

  std::string validate_file;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check scenario feasibility");
  validate_cmd->add_option("--scenario", validate_file, "scenario JSON")
      ->required();

  int gs_agents = 15, gs_slots = 50;
  std::uint64_t gs_seed = 1;
  std::string gs_convention = "exact_zoh", gs_out = "scenario.json";
  CLI::App* gs_cmd =
      app.add_subcommand("gen-scenario", "sample a feasible scenario");
  gs_cmd->add_option("--agents", gs_agents, "agent count");
  gs_cmd->add_option("--slots", gs_slots, "slots per agent");
  gs_cmd->add_option("--seed", gs_seed, "sampling seed");
  gs_cmd->add_option("--convention", gs_convention,
                     "exact_zoh or paper_literal");
  gs_cmd->add_option("--out", gs_out, "output file");

  int gg_nodes = 15;
  double gg_p = 0.2;
  std::uint64_t gg_seed = 1;
  std::string gg_kind = "er", gg_out = "graph.txt";
  CLI::App* gg_cmd =
      app.add_subcommand("gen-graph", "write a connected graph edge list");
  gg_cmd->add_option("--nodes", gg_nodes, "node count");
  gg_cmd->add_option("--kind", gg_kind, "er, path, or complete");
  gg_cmd->add_option("--p", gg_p, "edge probability for er");
  gg_cmd->add_option("--seed", gg_seed, "sampling seed");
  gg_cmd->add_option("--out", gg_out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) {
      if (!ro.config_file.empty()) apply_config_file(ro, *run_cmd);
      return do_run(ro);
    }
    if (validate_cmd->parsed()) return do_validate(validate_file);
    if (gs_cmd->parsed())
      return do_gen_scenario(gs_agents, gs_slots, gs_seed, gs_convention,
                             gs_out);
    if (gg_cmd->parsed())
      return do_gen_graph(gg_nodes, gg_kind, gg_p, gg_seed, gg_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InfeasibleScenario& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
