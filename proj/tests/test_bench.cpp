#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "ergodic/bench.hpp"
#include "ergodic/svg.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "xml_check.hpp"

using namespace ergodic;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.map_count = 2;
  cfg.map_resolution = 32;
  cfg.trials = 2;
  cfg.max_index = 4;
  AgentSpec a;
  a.u_max = 0.2;
  a.horizon_steps = 20;
  a.sensor = SensorModel::low_fidelity(1.0);
  cfg.team = {{a, 2}};
  cfg.optimizer.max_iters = 15;
  cfg.optimizer.restarts = 1;
  cfg.workers = 2;
  cfg.record_wall_time = false;
  cfg.render_svg = false;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

void check_same_agents(const std::vector<TeamEntry>& a, const std::vector<TeamEntry>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].count == b[i].count);
    const AgentSpec &x = a[i].spec, &y = b[i].spec;
    CHECK(x.type_id == y.type_id);
    CHECK(x.motion == y.motion);
    CHECK(x.sensor.sigma == y.sensor.sigma);
    CHECK(x.sensor.peak_prob == y.sensor.peak_prob);
    CHECK(x.u_max == y.u_max);
    CHECK(x.dt == y.dt);
    CHECK(x.horizon_steps == y.horizon_steps);
    if (x.motion == Motion::DiffDrive) {
      CHECK(x.kappa_max == y.kappa_max);
      CHECK(x.v_min == y.v_min);
    }
  }
}

void check_same_config(const ExperimentConfig& a, const ExperimentConfig& b) {
  CHECK(a.seed == b.seed);
  CHECK(a.map_count == b.map_count);
  CHECK(a.map_resolution == b.map_resolution);
  CHECK(a.trials == b.trials);
  CHECK(a.max_index == b.max_index);
  CHECK(a.strategies == b.strategies);
  CHECK(a.optimizer.max_iters == b.optimizer.max_iters);
  CHECK(a.optimizer.initial_step == b.optimizer.initial_step);
  CHECK(a.optimizer.backtrack == b.optimizer.backtrack);
  CHECK(a.optimizer.armijo == b.optimizer.armijo);
  CHECK(a.optimizer.tol == b.optimizer.tol);
  CHECK(a.optimizer.restarts == b.optimizer.restarts);
  check_same_agents(a.team, b.team);
}

}  // namespace

TEST_CASE("strategy names") {
  for (Strategy s : {Strategy::SR, Strategy::MR, Strategy::SO, Strategy::MO}) CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_strategy("XX"), ConfigError);
}

TEST_CASE("sign test against exact enumeration") {
  for (int n : {1, 5, 25})
    for (int w = 0; w <= n; ++w) CHECK(sign_test_p(w, n) == doctest::Approx(oracle::binomial_tail(w, n)).epsilon(1e-10));
  CHECK(sign_test_p(18, 25) <= 0.05);
  CHECK(sign_test_p(17, 25) > 0.05);
}

TEST_CASE("config parsing") {
  SUBCASE("shipped configs equal the presets") {
    const std::filesystem::path dir = ERGODIC_SOURCE_DIR "/configs";
    check_same_config(load_experiment_config(dir / "homogeneous.json"), homogeneous_preset());
    check_same_config(load_experiment_config(dir / "heterogeneous.json"), heterogeneous_preset());
  }
  SUBCASE("full schema") {
    const ExperimentConfig c = parse_experiment_config(R"({
      "seed": 3, "trials": 2, "workers": 1, "record_wall_time": false, "render_svg": false,
      "maps": {"files": [{"map": "a.ergmap", "regions": "a.ergstart"}]},
      "basis": {"max_index": 6},
      "team": [{"type_id": 4, "count": 2, "motion": "diff-drive", "sensor": {"sigma": 0.03, "peak_prob": 0.7},
                "u_max": 0.2, "dt": 0.05, "horizon_steps": 50, "kappa_max": 4, "v_min": 0.01}],
      "strategies": ["MO", "SR"],
      "optimizer": {"max_iters": 10, "initial_step": 0.5, "backtrack": 0.4, "armijo": 0.001, "tol": 0,
                    "restarts": 3, "max_backtracks": 20}
    })",
                                                       "/data");
    CHECK(c.seed == 3);
    CHECK(c.map_files.size() == 1);
    CHECK(c.map_files[0].map == std::filesystem::path("/data/a.ergmap"));
    CHECK(c.max_index == 6);
    CHECK(c.team[0].spec.motion == Motion::DiffDrive);
    CHECK(c.team[0].spec.sensor.sigma == 0.03);
    CHECK(c.team[0].spec.kappa_max == 4.0);
    CHECK(c.agents().size() == 2);
    CHECK(c.strategies == std::vector<Strategy>{Strategy::MO, Strategy::SR});
    CHECK(c.optimizer.restarts == 3);
    CHECK(c.optimizer.backtrack == 0.4);
    CHECK_FALSE(c.record_wall_time);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_experiment_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"team": [{"count": 1}], "bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"team": [{"motion": "hover"}]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"team": [{"count": 1}], "strategies": []})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"team": [{"type_id": 1}]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"team": [{"count": "x"}]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"trials": 1})"), ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
  }
}

TEST_CASE("synthetic instances") {
  const SyntheticInstance a = synthetic_instance(5, 1, 2, 30);
  const SyntheticInstance b = synthetic_instance(5, 1, 2, 30);
  CHECK(a.map == b.map);
  CHECK(a.regions == b.regions);
  CHECK(is_normalized(a.map));
  CHECK_FALSE(synthetic_instance(5, 2, 2, 30).map == a.map);

  const TempDir dir;
  const auto files = write_synthetic_maps(5, 2, 2, 30, dir.path());
  REQUIRE(files.size() == 2);
  CHECK(load_map(files[1].map) == a.map);
  CHECK(load_regions(files[1].regions, Domain{}) == a.regions);
}

TEST_CASE("trials are paired across strategies") {
  const ExperimentConfig cfg = tiny_config();
  const SyntheticInstance inst = synthetic_instance(cfg.seed, 0, 1, cfg.map_resolution);
  std::vector<Solution> sols;
  std::uint64_t seed = 0;
  for (Strategy s : {Strategy::SR, Strategy::MR, Strategy::SO, Strategy::MO}) {
    const TrialSetup t = make_trial(cfg, inst.map, inst.regions, 0, 1, s);
    if (s == Strategy::SR) {
      seed = t.optimizer.seed;
      CHECK(t.problem.fixed_starts[0] == t.problem.fixed_starts[1]);
    } else {
      CHECK(t.optimizer.seed == seed);
    }
    const Solution sol = plan(t.problem, t.optimizer);
    CHECK(count_violations(t.problem, sol) == 0);
    sols.push_back(sol);
  }
  for (const auto& s : sols) CHECK(s.draw_log == sols[0].draw_log);
  CHECK_FALSE(sols[0].draw_log.empty());
  // A different trial draws differently.
  const TrialSetup other = make_trial(cfg, inst.map, inst.regions, 0, 0, Strategy::SR);
  CHECK(other.optimizer.seed != seed);
}

TEST_CASE("heterogeneous SR falls back to projection when no common start exists") {
  ExperimentConfig cfg = tiny_config();
  AgentSpec g = cfg.team[0].spec;
  g.type_id = 1;
  cfg.team.push_back({g, 1});
  StartRegionSet r(Domain{});
  r.add(0, {0.0, 0.0, 0.2, 0.2});
  r.add(1, {0.7, 0.7, 0.9, 0.9});
  const GridMap map = synthetic_instance(1, 0, 1, 32).map;
  const TrialSetup t = make_trial(cfg, map, r, 0, 0, Strategy::SR);
  CHECK(t.start_fallback);
  CHECK(r.contains(0, t.problem.fixed_starts[0]));
  CHECK(r.contains(1, t.problem.fixed_starts[2]));
}

TEST_CASE("benchmark outputs") {
  SUBCASE("single SR row") {
    ExperimentConfig cfg = tiny_config();
    cfg.map_count = 1;
    cfg.trials = 1;
    cfg.strategies = {Strategy::SR};
    const TempDir dir;
    const BenchmarkResult r = run_benchmark(cfg, dir.path());
    CHECK(r.rows.size() == 1);
    REQUIRE(r.summary.size() == 1);
    CHECK(r.summary[0].improvement_pct == 0.0);
    const auto rows = csv(dir / "results.csv");
    const auto sum = csv(dir / "summary.csv");
    CHECK(rows.size() == 2);
    CHECK(sum.size() == 2);
    CHECK(sum[1][3] == "0");
  }
  SUBCASE("deterministic bytes and aggregates") {
    const ExperimentConfig cfg = tiny_config();
    const TempDir a, b;
    const BenchmarkResult ra = run_benchmark(cfg, a.path());
    ExperimentConfig serial = cfg;
    serial.workers = 1;
    run_benchmark(serial, b.path());
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));

    const auto rows = csv(a / "results.csv");
    REQUIRE(rows[0] == std::vector<std::string>{"map", "trial", "strategy", "team_phi", "iters", "wall_ms", "feasible"});
    CHECK(rows.size() == 1 + 2 * 2 * 4);
    // Row order: map, then trial, then strategy.
    CHECK(rows[1][0] == "0");
    CHECK(rows[1][2] == "SR");
    CHECK(rows[4][2] == "MO");
    CHECK(rows[5][1] == "1");
    std::map<std::string, std::vector<double>> by;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i][5] == "0");
      if (rows[i][6] == "1") by[rows[i][2]].push_back(std::stod(rows[i][3]));
    }
    const auto sum = csv(a / "summary.csv");
    REQUIRE(sum[0] == std::vector<std::string>{"strategy", "mean_phi", "std_phi", "improvement_pct_vs_SR"});
    const double sr_mean = oracle::mean_std(by["SR"]).first;
    for (std::size_t i = 1; i < sum.size(); ++i) {
      const auto [mean, sd] = oracle::mean_std(by[sum[i][0]]);
      CHECK(std::abs(std::stod(sum[i][1]) - mean) <= 1e-9 * std::max(1.0, mean));
      CHECK(std::abs(std::stod(sum[i][2]) - sd) <= 1e-9 * std::max(1.0, sd));
      CHECK(std::abs(std::stod(sum[i][3]) - 100.0 * (sr_mean - mean) / sr_mean) <= 1e-9);
    }
    for (const auto& row : ra.rows) CHECK(row.constraint_violations == 0);
  }
}

TEST_CASE("svg rendering") {
  const SyntheticInstance inst = synthetic_instance(2, 0, 1, 12);
  ExperimentConfig cfg = tiny_config();
  const TrialSetup t = make_trial(cfg, inst.map, inst.regions, 0, 0, Strategy::MO);
  const Solution sol = plan(t.problem, t.optimizer);

  const std::string empty = render_svg_string(inst.map, inst.regions, t.problem.agents, nullptr);
  const std::string full = render_svg_string(inst.map, inst.regions, t.problem.agents, &sol);
  std::string why;
  CHECK_MESSAGE(xml_well_formed(empty, &why), why);
  CHECK_MESSAGE(xml_well_formed(full, &why), why);
  CHECK(empty.find("<polyline") == std::string::npos);
  CHECK(full.find("<polyline") != std::string::npos);
  CHECK(full.find("stroke-dasharray") != std::string::npos);
  CHECK(full == render_svg_string(inst.map, inst.regions, t.problem.agents, &sol));

  const TempDir dir;
  render_svg(inst.map, inst.regions, t.problem.agents, &sol, dir / "a.svg");
  CHECK(slurp(dir / "a.svg") == full);
  CHECK_THROWS_AS(render_svg(inst.map, inst.regions, t.problem.agents, &sol, dir / "missing" / "a.svg"), Error);
  CHECK_FALSE(xml_well_formed("<a><b></a></b>", &why));
}
