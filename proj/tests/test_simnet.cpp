#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <json.hpp>

#include "peakmin/simnet.hpp"

using namespace peakmin;

namespace {

LocalProblemData triangle() {
  Matrix A(1, 2);
  A(0, 0) = -1.0;
  A(0, 1) = -1.0;
  return make_local_data(2, {1.0, 1.0}, A, {-1.0}, {0.0, 0.0}, {1.0, 1.0});
}

// Must place at least 0.8 on slot 1; solo optimum (0.8, 0) with peak 0.8.
LocalProblemData slot1_hog() {
  return make_local_data(2, {1.0, 1.0}, Matrix(0, 2), {}, {0.8, 0.0},
                         {1.0, 1.0});
}

RunConfig base_config(int rounds) {
  RunConfig cfg;
  cfg.max_rounds = rounds;
  cfg.schedule = {StepSchedule::Kind::power_law, 0.8, 1.0};
  cfg.compute_oracle = true;
  return cfg;
}

}  // namespace

TEST_CASE("single node: local solve equals the oracle from round 1") {
  Graph g = make_graph(1, {});
  Trace tr = run({triangle()}, g, base_config(50));
  REQUIRE(tr.has_oracle);
  CHECK(tr.rows.front().t == 1);
  CHECK(tr.rows.front().sum_rho == Catch::Approx(tr.p_star).margin(1e-9));
  // No edges: consensus residual 0 forever, so the run stops after 10 rounds.
  CHECK(tr.rounds_executed == 10);
  CHECK(tr.stopped_by_consensus);
  CHECK(tr.rows.back().consensus_residual == 0.0);
}

TEST_CASE("identical symmetric agents agree immediately") {
  Graph g = complete_graph(2);
  Trace tr = run({triangle(), triangle()}, g, base_config(10000));
  CHECK(tr.p_star == Catch::Approx(1.0).margin(1e-9));
  CHECK(tr.rows.back().sum_rho == Catch::Approx(1.0).margin(1e-3));
  CHECK(tr.stopped_by_consensus);  // duals coincide from the first round
}

TEST_CASE("asymmetric pair converges in objective value") {
  Graph g = complete_graph(2);
  RunConfig cfg = base_config(3000);
  cfg.record_every = 1;
  Trace tr = run({triangle(), slot1_hog()}, g, cfg);
  REQUIRE(tr.p_star == Catch::Approx(0.9).margin(1e-9));
  // Round 1 is the uncoupled solve: 0.5 + 0.8.
  CHECK(tr.rows.front().sum_rho == Catch::Approx(1.3).margin(1e-9));
  double best_err = kInf;
  for (const TraceRow& row : tr.rows)
    best_err = std::min(best_err, row.cost_error);
  CHECK(best_err <= 5e-3);
  CHECK(std::abs(tr.rows.back().sum_rho - 0.9) <= 0.05);
}

TEST_CASE("max_rounds=1 records exactly one row") {
  Graph g = complete_graph(2);
  Trace tr = run({triangle(), slot1_hog()}, g, base_config(1));
  REQUIRE(tr.rows.size() == 1);
  CHECK(tr.rows[0].t == 1);
  CHECK(tr.rounds_executed == 1);
  CHECK_FALSE(tr.stopped_by_consensus);
}

TEST_CASE("recording cadence keeps t=1 and the final round") {
  Graph g = complete_graph(2);
  RunConfig cfg = base_config(25);
  cfg.record_every = 10;
  cfg.epsilon_consensus = 0.0;  // never stop early
  Trace tr = run({triangle(), slot1_hog()}, g, cfg);
  std::vector<int> ts;
  for (const TraceRow& row : tr.rows) ts.push_back(row.t);
  CHECK(ts == std::vector<int>{1, 10, 20, 25});
}

TEST_CASE("consensus residual over the node states") {
  Graph g = complete_graph(2);
  std::vector<NodeState> states;
  states.push_back(make_node_state(1, default_box_data(2), {2}));
  states.push_back(make_node_state(2, default_box_data(2), {1}));
  states[0].last_pair.mu = {1.0, 0.0};
  states[1].last_pair.mu = {0.0, 1.0};
  CHECK(consensus_residual(states, g) == Catch::Approx(1.0));
  states[1].last_pair.mu = {1.0, 0.0};
  CHECK(consensus_residual(states, g) == 0.0);

  Graph single = make_graph(1, {});
  std::vector<NodeState> one;
  one.push_back(make_node_state(1, default_box_data(2), {}));
  CHECK(consensus_residual(one, single) == 0.0);
}

TEST_CASE("rows are internally consistent") {
  Graph g = path_graph(3);
  RunConfig cfg = base_config(40);
  cfg.record_every = 7;
  Trace tr = run({triangle(), slot1_hog(), triangle()}, g, cfg);
  for (const TraceRow& row : tr.rows) {
    double sum = 0.0;
    for (double r : row.rho) sum += r;
    REQUIRE(row.sum_rho == Catch::Approx(sum).margin(1e-12));
    REQUIRE(row.aggregate_profile.size() == 2);
  }
  REQUIRE(tr.final_x.size() == 3);
}

TEST_CASE("reruns and thread fan-out are bit-identical") {
  Graph g = path_graph(3);
  RunConfig cfg = base_config(60);
  std::vector<LocalProblemData> inst{triangle(), slot1_hog(), triangle()};
  Trace a = run(inst, g, cfg);
  Trace b = run(inst, g, cfg);
  RunConfig threaded = cfg;
  threaded.num_threads = 3;
  Trace c = run(inst, g, threaded);

  auto same = [](const Trace& u, const Trace& v) {
    REQUIRE(u.rows.size() == v.rows.size());
    for (std::size_t k = 0; k < u.rows.size(); ++k) {
      REQUIRE(u.rows[k].t == v.rows[k].t);
      REQUIRE(u.rows[k].sum_rho == v.rows[k].sum_rho);
      REQUIRE(u.rows[k].consensus_residual == v.rows[k].consensus_residual);
      REQUIRE(u.rows[k].rho == v.rows[k].rho);
      REQUIRE(u.rows[k].aggregate_profile == v.rows[k].aggregate_profile);
    }
    REQUIRE(u.final_x == v.final_x);
  };
  same(a, b);
  same(a, c);
}

TEST_CASE("invariant accounting stays at solver precision") {
  Graph g = path_graph(3);
  RunConfig cfg = base_config(80);
  cfg.check_invariants = true;
  Trace tr = run({triangle(), slot1_hog(), triangle()}, g, cfg);
  REQUIRE(tr.invariants.checked);
  CHECK(tr.invariants.mu_simplex <= 1e-7);
  CHECK(tr.invariants.lambda_antisymmetry <= 1e-12);
  CHECK(tr.invariants.telescoping <= 1e-10);
  CHECK(tr.invariants.x_infeasibility <= 1e-8);
  CHECK(tr.invariants.eta_gap <= 1e-7);
}

TEST_CASE("mismatched inputs are rejected") {
  Graph g = complete_graph(2);
  CHECK_THROWS_AS(run({triangle()}, g, base_config(5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(run({triangle(), default_box_data(3)}, g, base_config(5)),
                  std::invalid_argument);
  RunConfig bad = base_config(0);
  CHECK_THROWS_AS(run({triangle(), triangle()}, g, bad),
                  std::invalid_argument);
}

TEST_CASE("csv and json writers") {
  Graph g = complete_graph(2);
  RunConfig cfg = base_config(12);
  cfg.record_every = 5;
  std::vector<LocalProblemData> inst{triangle(), slot1_hog()};
  Trace tr = run(inst, g, cfg);

  std::ostringstream trace_csv;
  write_trace_csv(trace_csv, tr);
  std::istringstream lines(trace_csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,sum_rho,cost_error,consensus_residual,rho_1,rho_2");
  int data_lines = 0;
  for (std::string line; std::getline(lines, line);) ++data_lines;
  CHECK(data_lines == (int)tr.rows.size());

  std::ostringstream profile_csv;
  write_profile_csv(profile_csv, tr, inst);
  std::istringstream plines(profile_csv.str());
  std::getline(plines, header);
  CHECK(header == "slot,aggregate,agent_1,agent_2");

  std::ostringstream summary;
  write_summary_json(summary, tr, cfg);
  nlohmann::json j = nlohmann::json::parse(summary.str());
  CHECK(j["n_agents"] == 2);
  CHECK(j["slot_count"] == 2);
  CHECK(j["rounds_executed"] == tr.rounds_executed);
  CHECK(j.contains("p_star"));
  CHECK(j.contains("sum_rho_final"));
  CHECK(j["schedule"]["exponent"] == 0.8);

  // Without the oracle the cost column is NaN and p_star is null.
  RunConfig no_oracle = cfg;
  no_oracle.compute_oracle = false;
  Trace tr2 = run(inst, g, no_oracle);
  CHECK(std::isnan(tr2.rows.back().cost_error));
  std::ostringstream summary2;
  write_summary_json(summary2, tr2, no_oracle);
  nlohmann::json j2 = nlohmann::json::parse(summary2.str());
  CHECK(j2["p_star"].is_null());
}
