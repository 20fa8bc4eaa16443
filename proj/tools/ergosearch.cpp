// ergosearch: command-line front end for the ergodic start-location planner.
//
// Exit codes: 0 success, 1 configuration or input-file error, 2 runtime error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ergodic/bench.hpp"
#include "ergodic/optimizer.hpp"
#include "ergodic/svg.hpp"

namespace fs = std::filesystem;
using namespace ergodic;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<Vec2> parse_starts(const std::string& text) {
  // "x,y;x,y;..."
  std::vector<Vec2> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    Vec2 p;
    char comma = 0;
    std::istringstream is(item);
    if (!(is >> p.x >> comma >> p.y) || comma != ',') throw ConfigError("bad --starts entry '" + item + "'");
    out.push_back(p);
  }
  return out;
}

int cmd_gen_maps(int count, std::uint64_t seed, int types, std::size_t resolution, const fs::path& out) {
  const auto files = write_synthetic_maps(seed, count, types, resolution, out);
  for (const auto& f : files) std::cout << f.map.string() << ' ' << f.regions.string() << '\n';
  return 0;
}

int cmd_plan(const fs::path& map_path, const fs::path& regions_path, const fs::path& config_path,
             const std::string& mode, const std::string& starts_text, std::uint64_t seed, const fs::path& out) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  GridMap map = normalize(load_map(map_path));
  StartRegionSet regions = load_regions(regions_path, map.domain());

  ProblemSpec p;
  p.map = map;
  p.basis = BasisSpec(map.domain(), cfg.max_index);
  p.agents = cfg.agents();
  p.regions = regions;
  if (mode == "fixed") {
    p.mode = StartMode::Fixed;
    if (!starts_text.empty()) {
      p.fixed_starts = parse_starts(starts_text);
    } else {
      Rng rng(seed);
      for (const auto& a : p.agents) p.fixed_starts.push_back(sample_start(regions, a.type_id, rng));
    }
  } else if (mode == "shared") {
    p.mode = StartMode::SharedOptimized;
  } else {
    p.mode = StartMode::PerAgentOptimized;
  }
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  const Solution sol = plan(p, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out);
  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 0; i < sol.trajectories.size(); ++i)
    records.push_back({static_cast<int>(i), p.agents[i].type_id, p.agents[i].motion, sol.trajectories[i]});
  save_trajectories(records, out / "trajectories.ergtraj");
  render_svg(map, regions, p.agents, &sol, out / "plan.svg");
  {
    std::ofstream trace(out / "trace.csv");
    trace << "iteration,objective\n";
    for (std::size_t i = 0; i < sol.metric_trace.size(); ++i)
      trace << i << ',' << format_number(sol.metric_trace[i]) << '\n';
  }

  std::cout << "mode " << to_string(p.mode) << "  team_phi " << format_number(sol.metric) << "  iterations "
            << sol.iterations << "  restart " << sol.best_restart << "  time " << secs << " s\n";
  for (std::size_t b = 0; b < sol.type_ids.size(); ++b)
    std::cout << "  type " << sol.type_ids[b] << " band phi " << format_number(sol.type_metrics[b]) << '\n';
  for (std::size_t i = 0; i < sol.starts.size(); ++i)
    std::cout << "  agent " << i << " start " << sol.starts[i].position.x << ' ' << sol.starts[i].position.y
              << (sol.clamp_counts[i] ? "  (clamped steps: " + std::to_string(sol.clamp_counts[i]) + ")" : "")
              << '\n';
  return 0;
}

int cmd_bench(const fs::path& config_path, const fs::path& out, bool no_timing, int workers) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (no_timing) cfg.record_wall_time = false;
  if (workers > 0) cfg.workers = workers;
  const BenchmarkResult res = run_benchmark(cfg, out);
  int infeasible = 0;
  int violations = 0;
  for (const auto& r : res.rows) {
    infeasible += r.feasible ? 0 : 1;
    violations += r.constraint_violations;
  }
  std::printf("%-8s %14s %14s %16s\n", "strategy", "mean_phi", "std_phi", "improvement_%");
  for (const auto& s : res.summary)
    std::printf("%-8s %14.6g %14.6g %16.3f\n", to_string(s.strategy), s.mean_phi, s.std_phi, s.improvement_pct);
  std::printf("rows %zu  infeasible %d  constraint violations %d\n", res.rows.size(), infeasible, violations);
  return 0;
}

int cmd_check_grad(std::uint64_t seed, int instances) {
  const GradientReport integ = gradient_check_suite(seed, Motion::Integrator, instances);
  const GradientReport diff = gradient_check_suite(seed, Motion::DiffDrive, instances);
  const bool ok = integ.max_rel_error <= 1e-5 && diff.max_rel_error <= 1e-3;
  std::printf("integrator  instances %d  max_rel_error %.3e  (limit 1e-5)  %.2f s\n", integ.instances,
              integ.max_rel_error, integ.seconds);
  std::printf("diff-drive  instances %d  max_rel_error %.3e  (limit 1e-3)  %.2f s\n", diff.instances,
              diff.max_rel_error, diff.seconds);
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent ergodic search planning with start-location optimization"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-maps", "Generate synthetic GMM maps and start regions");
  int gen_count = 10;
  std::uint64_t gen_seed = 1;
  int gen_types = 1;
  std::size_t gen_res = 100;
  fs::path gen_out;
  gen->add_option("--count", gen_count, "Number of maps")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--types", gen_types, "Agent types with start regions")->check(CLI::Range(1, 4));
  gen->add_option("--resolution", gen_res, "Cells per axis")->check(CLI::Range(2, 4096));
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* pl = app.add_subcommand("plan", "Plan one team on one map");
  fs::path pl_map, pl_regions, pl_config, pl_out;
  std::string pl_mode = "per-agent";
  std::string pl_starts;
  std::uint64_t pl_seed = 1;
  pl->add_option("--map", pl_map, "ERGMAP file")->required();
  pl->add_option("--regions", pl_regions, "ERGSTART file")->required();
  pl->add_option("--config", pl_config, "JSON config (team, basis, optimizer)")->required();
  pl->add_option("--mode", pl_mode, "Start mode")->check(CLI::IsMember({"fixed", "shared", "per-agent"}));
  pl->add_option("--starts", pl_starts, "Fixed starts 'x,y;x,y;...' (fixed mode)");
  pl->add_option("--seed", pl_seed, "Optimizer seed");
  pl->add_option("--out", pl_out, "Output directory")->required();

  auto* bench = app.add_subcommand("bench", "Run the SR/MR/SO/MO benchmark");
  fs::path bench_config, bench_out;
  bool bench_no_timing = false;
  int bench_workers = 0;
  bench->add_option("--config", bench_config, "JSON experiment config")->required();
  bench->add_option("--out", bench_out, "Output directory")->required();
  bench->add_flag("--no-timing", bench_no_timing, "Write wall_ms as 0 for reproducible CSV bytes");
  bench->add_option("--workers", bench_workers, "Worker threads (default: config or hardware)");

  auto* grad = app.add_subcommand("check-grad", "Finite-difference check of the analytic gradients");
  std::uint64_t grad_seed = 1;
  int grad_instances = 100;
  grad->add_option("--seed", grad_seed, "First instance seed");
  grad->add_option("--instances", grad_instances, "Instances per motion model")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_maps(gen_count, gen_seed, gen_types, gen_res, gen_out);
    if (*pl) return cmd_plan(pl_map, pl_regions, pl_config, pl_mode, pl_starts, pl_seed, pl_out);
    if (*bench) return cmd_bench(bench_config, bench_out, bench_no_timing, bench_workers);
    if (*grad) return cmd_check_grad(grad_seed, grad_instances);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
