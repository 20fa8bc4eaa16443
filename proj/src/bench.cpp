#include "ergodic/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ergodic/svg.hpp"

namespace ergodic {

using json = nlohmann::json;

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::SR:
      return "SR";
    case Strategy::MR:
      return "MR";
    case Strategy::SO:
      return "SO";
    case Strategy::MO:
      return "MO";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "SR") return Strategy::SR;
  if (s == "MR") return Strategy::MR;
  if (s == "SO") return Strategy::SO;
  if (s == "MO") return Strategy::MO;
  throw ConfigError("unknown strategy '" + s + "' (expected SR, MR, SO or MO)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (map_files.empty() && map_count < 1) throw ConfigError("need at least one map");
  if (map_resolution < 2) throw ConfigError("map resolution must be at least 2");
  if (max_index < 0) throw ConfigError("basis max_index must be nonnegative");
  if (team.empty()) throw ConfigError("team has no agents");
  std::map<int, const AgentSpec*> by_type;
  for (const auto& e : team) {
    if (e.count < 1) throw ConfigError("team entry count must be at least 1");
    e.spec.validate();
    auto [it, inserted] = by_type.try_emplace(e.spec.type_id, &e.spec);
    if (!inserted && it->second->sensor.sigma != e.spec.sensor.sigma)
      throw ConfigError("agents of one type must share a sensor model");
  }
  if (map_files.empty()) {
    int expect = 0;
    for (const auto& [t, _] : by_type)
      if (t != expect++) throw ConfigError("synthetic maps need agent type ids 0 .. M-1");
  }
  std::set<int> horizons;
  for (const auto& e : team) horizons.insert(e.spec.horizon_steps);
  if (horizons.size() != 1) throw ConfigError("all agents must share horizon_steps");
  optimizer.validate();
}

std::vector<AgentSpec> ExperimentConfig::agents() const {
  std::vector<AgentSpec> out;
  for (const auto& e : team)
    for (int i = 0; i < e.count; ++i) out.push_back(e.spec);
  return out;
}

int ExperimentConfig::type_count() const {
  std::set<int> ids;
  for (const auto& e : team) ids.insert(e.spec.type_id);
  return static_cast<int>(ids.size());
}

namespace {

AgentSpec integrator(int type_id, SensorModel sensor) {
  AgentSpec a;
  a.type_id = type_id;
  a.motion = Motion::Integrator;
  a.sensor = sensor;
  a.u_max = 0.3;
  a.dt = 0.1;
  a.horizon_steps = 100;
  return a;
}

}  // namespace

ExperimentConfig homogeneous_preset() {
  ExperimentConfig cfg;
  cfg.map_count = 10;
  cfg.trials = 5;
  cfg.team = {{integrator(0, SensorModel::low_fidelity(1.0)), 4}};
  return cfg;
}

ExperimentConfig heterogeneous_preset() {
  ExperimentConfig cfg;
  cfg.map_count = 5;
  cfg.trials = 5;
  AgentSpec ground;
  ground.type_id = 1;
  ground.motion = Motion::DiffDrive;
  ground.sensor = SensorModel::high_fidelity(1.0);
  ground.u_max = 0.3;
  ground.dt = 0.1;
  ground.horizon_steps = 100;
  ground.kappa_max = 10.0;
  ground.v_min = 0.0;
  cfg.team = {{integrator(0, SensorModel::low_fidelity(1.0)), 2}, {ground, 2}};
  return cfg;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

SensorModel parse_sensor(const json& j, double side) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "high") return SensorModel::high_fidelity(side);
    if (s == "low") return SensorModel::low_fidelity(side);
    throw ConfigError("sensor preset must be 'high' or 'low', got '" + s + "'");
  }
  check_keys(j, {"sigma", "peak_prob"}, "sensor");
  return {j.at("sigma").get<double>(), j.at("peak_prob").get<double>()};
}

TeamEntry parse_team_entry(const json& j) {
  check_keys(j, {"type_id", "count", "motion", "sensor", "u_max", "dt", "horizon_steps", "kappa_max", "v_min"},
             "team entry");
  TeamEntry e;
  AgentSpec& a = e.spec;
  a.type_id = get_or(j, "type_id", 0);
  e.count = get_or(j, "count", 1);
  const auto motion = get_or<std::string>(j, "motion", "integrator");
  if (motion == "integrator")
    a.motion = Motion::Integrator;
  else if (motion == "diff-drive")
    a.motion = Motion::DiffDrive;
  else
    throw ConfigError("motion must be 'integrator' or 'diff-drive', got '" + motion + "'");
  a.sensor = j.contains("sensor") ? parse_sensor(j.at("sensor"), 1.0) : SensorModel::high_fidelity(1.0);
  a.u_max = get_or(j, "u_max", 0.3);
  a.dt = get_or(j, "dt", 0.1);
  a.horizon_steps = get_or(j, "horizon_steps", 100);
  a.kappa_max = get_or(j, "kappa_max", 10.0);
  a.v_min = get_or(j, "v_min", 0.0);
  return e;
}

OptimizerConfig parse_optimizer(const json& j) {
  check_keys(j, {"max_iters", "initial_step", "backtrack", "armijo", "tol", "restarts", "max_backtracks"},
             "optimizer");
  OptimizerConfig o;
  o.max_iters = get_or(j, "max_iters", o.max_iters);
  o.initial_step = get_or(j, "initial_step", o.initial_step);
  o.backtrack = get_or(j, "backtrack", o.backtrack);
  o.armijo = get_or(j, "armijo", o.armijo);
  o.tol = get_or(j, "tol", o.tol);
  o.restarts = get_or(j, "restarts", o.restarts);
  o.max_backtracks = get_or(j, "max_backtracks", o.max_backtracks);
  return o;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    check_keys(j, {"seed", "maps", "trials", "basis", "team", "strategies", "optimizer", "workers",
                   "record_wall_time", "render_svg"},
               "config");
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.trials = get_or(j, "trials", cfg.trials);
    cfg.workers = get_or(j, "workers", cfg.workers);
    cfg.record_wall_time = get_or(j, "record_wall_time", cfg.record_wall_time);
    cfg.render_svg = get_or(j, "render_svg", cfg.render_svg);
    if (j.contains("maps")) {
      const json& m = j.at("maps");
      check_keys(m, {"count", "resolution", "files"}, "maps");
      cfg.map_count = get_or(m, "count", cfg.map_count);
      cfg.map_resolution = get_or<std::size_t>(m, "resolution", cfg.map_resolution);
      if (m.contains("files")) {
        for (const auto& f : m.at("files")) {
          check_keys(f, {"map", "regions"}, "maps.files entry");
          MapFiles mf{f.at("map").get<std::string>(), f.at("regions").get<std::string>()};
          if (mf.map.is_relative()) mf.map = base_dir / mf.map;
          if (mf.regions.is_relative()) mf.regions = base_dir / mf.regions;
          cfg.map_files.push_back(mf);
        }
      }
    }
    if (j.contains("basis")) {
      check_keys(j.at("basis"), {"max_index"}, "basis");
      cfg.max_index = get_or(j.at("basis"), "max_index", cfg.max_index);
    }
    if (!j.contains("team")) throw ConfigError("config needs a 'team' array");
    for (const auto& e : j.at("team")) cfg.team.push_back(parse_team_entry(e));
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Maps

SyntheticInstance synthetic_instance(std::uint64_t seed, int index, int type_count, std::size_t resolution) {
  const Domain domain{1.0, 1.0};
  const auto i = static_cast<std::uint64_t>(index);
  return {generate_gmm_map(random_gmm_spec(derive_seed(seed, i, 0x6d6170ULL), domain), resolution, resolution,
                           domain),
          random_start_regions(derive_seed(seed, i, 0x726567ULL), domain, type_count)};
}

std::vector<MapFiles> write_synthetic_maps(std::uint64_t seed, int count, int type_count, std::size_t resolution,
                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<MapFiles> files;
  for (int m = 0; m < count; ++m) {
    const auto inst = synthetic_instance(seed, m, type_count, resolution);
    char name[32];
    std::snprintf(name, sizeof(name), "map_%03d", m);
    MapFiles f{dir / (std::string(name) + ".ergmap"), dir / (std::string(name) + ".ergstart")};
    save_map(inst.map, f.map);
    save_regions(inst.regions, f.regions);
    files.push_back(f);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Trials

TrialSetup make_trial(const ExperimentConfig& cfg, const GridMap& map, const StartRegionSet& regions,
                      int map_index, int trial, Strategy strategy) {
  const std::uint64_t trial_seed =
      derive_seed(cfg.seed, static_cast<std::uint64_t>(map_index), static_cast<std::uint64_t>(trial));
  TrialSetup setup;
  ProblemSpec& p = setup.problem;
  p.map = map;
  p.basis = BasisSpec(map.domain(), cfg.max_index);
  p.agents = cfg.agents();
  p.regions = regions;
  setup.optimizer = cfg.optimizer;
  setup.optimizer.seed = derive_seed(trial_seed, 13);

  switch (strategy) {
    case Strategy::SR: {
      Rng rng(derive_seed(trial_seed, 11));
      const auto common = common_regions(regions, p.type_ids());
      Vec2 start;
      if (!common.empty()) {
        start = sample_in_rects(common, rng);
        p.fixed_starts.assign(p.agents.size(), start);
      } else {
        setup.start_fallback = true;
        start = sample_start(regions, p.type_ids().front(), rng);
        for (const auto& a : p.agents) p.fixed_starts.push_back(project_to_regions(start, regions, a.type_id));
      }
      p.mode = StartMode::Fixed;
      break;
    }
    case Strategy::MR: {
      Rng rng(derive_seed(trial_seed, 12));
      for (const auto& a : p.agents) p.fixed_starts.push_back(sample_start(regions, a.type_id, rng));
      p.mode = StartMode::Fixed;
      break;
    }
    case Strategy::SO:
      p.mode = StartMode::SharedOptimized;
      break;
    case Strategy::MO:
      p.mode = StartMode::PerAgentOptimized;
      break;
  }
  return setup;
}

int count_violations(const ProblemSpec& problem, const Solution& sol) {
  int bad = 0;
  const auto types = problem.type_ids();
  for (std::size_t i = 0; i < problem.agents.size(); ++i) {
    const AgentSpec& a = problem.agents[i];
    const Vec2& s = sol.starts[i].position;
    if (!(project_to_regions(s, problem.regions, a.type_id) == s)) ++bad;
    if (problem.mode == StartMode::Fixed && !(s == problem.fixed_starts[i])) ++bad;
    if (problem.mode == StartMode::SharedOptimized) {
      if (!(s == sol.starts.front().position)) ++bad;
      for (int t : types)
        if (!(project_to_regions(s, problem.regions, t) == s)) ++bad;
    }
    if (!controls_feasible(a, sol.controls[i])) ++bad;
  }
  return bad;
}

namespace {

TrialRecord run_trial(const ExperimentConfig& cfg, const GridMap& map, const StartRegionSet& regions, int m,
                      int t, Strategy s) {
  TrialRecord rec;
  rec.map = m;
  rec.trial = t;
  rec.strategy = s;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrialSetup setup = make_trial(cfg, map, regions, m, t, s);
    rec.start_fallback = setup.start_fallback;
    if (setup.start_fallback) rec.note = "no common start; projected per type";
    Solution sol = plan(setup.problem, setup.optimizer);
    rec.feasible = true;
    rec.team_phi = sol.metric;
    rec.type_ids = sol.type_ids;
    rec.type_phi = sol.type_metrics;
    rec.iterations = sol.iterations;
    rec.constraint_violations = count_violations(setup.problem, sol);
    rec.solution = std::move(sol);
  } catch (const InfeasibleError& e) {
    rec.feasible = false;
    rec.team_phi = std::nan("");
    rec.note = e.what();
  } catch (const DegenerateError& e) {
    rec.feasible = false;
    rec.team_phi = std::nan("");
    rec.note = e.what();
  }
  if (cfg.record_wall_time)
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

std::vector<StrategySummary> summarize(const std::vector<TrialRecord>& rows, const std::vector<Strategy>& strategies) {
  std::vector<StrategySummary> out;
  for (Strategy s : strategies) {
    StrategySummary sum;
    sum.strategy = s;
    std::vector<double> vals;
    for (const auto& r : rows)
      if (r.strategy == s && r.feasible) vals.push_back(r.team_phi);
    sum.samples = static_cast<int>(vals.size());
    if (!vals.empty()) {
      sum.mean_phi = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
      double ss = 0.0;
      for (double v : vals) ss += (v - sum.mean_phi) * (v - sum.mean_phi);
      sum.std_phi = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1)) : 0.0;
    } else {
      sum.mean_phi = std::nan("");
      sum.std_phi = std::nan("");
    }
    out.push_back(sum);
  }
  const auto sr = std::find_if(out.begin(), out.end(), [](const auto& x) { return x.strategy == Strategy::SR; });
  for (auto& s : out) {
    if (sr == out.end() || sr->samples == 0)
      s.improvement_pct = std::nan("");
    else
      s.improvement_pct = 100.0 * (sr->mean_phi - s.mean_phi) / sr->mean_phi;
  }
  return out;
}

BenchmarkResult run_benchmark(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const int type_count = cfg.type_count();

  std::vector<SyntheticInstance> instances;
  if (!cfg.map_files.empty()) {
    for (const auto& f : cfg.map_files) {
      GridMap map = normalize(load_map(f.map));
      StartRegionSet regions = load_regions(f.regions, map.domain());
      instances.push_back({std::move(map), std::move(regions)});
    }
  } else {
    for (int m = 0; m < cfg.map_count; ++m)
      instances.push_back(synthetic_instance(cfg.seed, m, type_count, cfg.map_resolution));
  }
  for (const auto& inst : instances)
    for (const auto& a : cfg.agents())
      if (!inst.regions.has_type(a.type_id))
        throw ConfigError("start regions lack agent type " + std::to_string(a.type_id));

  struct Task {
    int map, trial;
    Strategy strategy;
  };
  std::vector<Task> tasks;
  for (int m = 0; m < static_cast<int>(instances.size()); ++m)
    for (int t = 0; t < cfg.trials; ++t)
      for (Strategy s : cfg.strategies) tasks.push_back({m, t, s});

  BenchmarkResult result;
  result.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const Task& task = tasks[i];
        const auto& inst = instances[task.map];
        result.rows[i] = run_trial(cfg, inst.map, inst.regions, task.map, task.trial, task.strategy);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  result.summary = summarize(result.rows, cfg.strategies);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    export_csv(result, *out_dir / "results.csv", *out_dir / "summary.csv");
    if (cfg.render_svg) {
      const auto agents = cfg.agents();
      for (const auto& row : result.rows) {
        if (row.trial != 0 || !row.solution) continue;
        const auto& inst = instances[row.map];
        char name[64];
        std::snprintf(name, sizeof(name), "map_%03d_trial0_%s.svg", row.map, to_string(row.strategy));
        render_svg(inst.map, inst.regions, agents, &*row.solution, *out_dir / name);
      }
    }
  }
  return result;
}

void export_csv(const BenchmarkResult& result, const std::filesystem::path& rows_path,
                const std::filesystem::path& summary_path) {
  {
    std::ofstream out(rows_path, std::ios::binary);
    if (!out) throw Error(rows_path.string() + ": cannot open file for writing");
    out << "map,trial,strategy,team_phi,iters,wall_ms,feasible\n";
    for (const auto& r : result.rows) {
      out << r.map << ',' << r.trial << ',' << to_string(r.strategy) << ',' << format_number(r.team_phi) << ','
          << r.iterations << ',' << format_number(std::round(r.wall_ms * 1000.0) / 1000.0) << ','
          << (r.feasible ? 1 : 0) << '\n';
    }
    if (!out) throw Error(rows_path.string() + ": write failed");
  }
  std::ofstream out(summary_path, std::ios::binary);
  if (!out) throw Error(summary_path.string() + ": cannot open file for writing");
  out << "strategy,mean_phi,std_phi,improvement_pct_vs_SR\n";
  for (const auto& s : result.summary) {
    out << to_string(s.strategy) << ',' << format_number(s.mean_phi) << ',' << format_number(s.std_phi) << ','
        << format_number(s.improvement_pct) << '\n';
  }
  if (!out) throw Error(summary_path.string() + ": write failed");
}

double sign_test_p(int wins, int n) {
  if (n <= 0) return 1.0;
  // Sum of C(n, k) / 2^n for k >= wins, in log space.
  double p = 0.0;
  for (int k = std::max(wins, 0); k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  return std::min(p, 1.0);
}

}  // namespace ergodic
