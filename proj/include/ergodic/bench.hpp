/**
 * @file bench.hpp
 * @brief Four-strategy start-location benchmark: single random (SR), multiple
 *        random (MR), single optimized (SO) and multiple optimized (MO).
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergodic/agents.hpp"
#include "ergodic/maps.hpp"
#include "ergodic/optimizer.hpp"

namespace ergodic {

enum class Strategy { SR, MR, SO, MO };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct TeamEntry {
  AgentSpec spec;
  int count = 1;
};

struct MapFiles {
  std::filesystem::path map;
  std::filesystem::path regions;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  /// Synthetic maps generated from the seed; ignored when map_files is set.
  int map_count = 10;
  std::size_t map_resolution = 100;
  std::vector<MapFiles> map_files;
  int trials = 5;
  int max_index = 10;
  std::vector<TeamEntry> team;
  std::vector<Strategy> strategies{Strategy::SR, Strategy::MR, Strategy::SO, Strategy::MO};
  OptimizerConfig optimizer;
  /// 0 means one worker per hardware thread.
  int workers = 0;
  /// When false, wall_ms is written as 0 so the row file is reproducible.
  bool record_wall_time = true;
  bool render_svg = true;

  void validate() const;
  std::vector<AgentSpec> agents() const;
  int type_count() const;
};

/// N = 4 integrator agents with wide/low-fidelity sensors, 10 maps x 5 trials.
ExperimentConfig homogeneous_preset();
/// 2 wide/low-fidelity integrators + 2 narrow/high-fidelity diff-drives, 5 maps x 5 trials.
ExperimentConfig heterogeneous_preset();

/// Parses the JSON config; relative map paths resolve against base_dir.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SyntheticInstance {
  GridMap map;
  StartRegionSet regions;
};

/// Map `index` of the synthetic set derived from `seed`.
SyntheticInstance synthetic_instance(std::uint64_t seed, int index, int type_count,
                                     std::size_t resolution);

struct TrialRecord {
  int map = 0;
  int trial = 0;
  Strategy strategy = Strategy::SR;
  bool feasible = false;
  /// SR fell back to per-type projection because no common start exists.
  bool start_fallback = false;
  std::string note;
  double team_phi = 0.0;
  std::vector<int> type_ids;
  std::vector<double> type_phi;
  int iterations = 0;
  double wall_ms = 0.0;
  /// Starts off their region set or controls outside the limits.
  int constraint_violations = 0;
  std::optional<Solution> solution;
};

struct StrategySummary {
  Strategy strategy = Strategy::SR;
  int samples = 0;
  double mean_phi = 0.0;
  double std_phi = 0.0;
  /// 100 * (mean SR - mean this) / mean SR; NaN without an SR column.
  double improvement_pct = 0.0;
};

struct BenchmarkResult {
  std::vector<TrialRecord> rows;  // ordered by (map, trial, strategy)
  std::vector<StrategySummary> summary;
};

/// Builds the problem for one strategy of one trial (exposed for tests).
struct TrialSetup {
  ProblemSpec problem;
  OptimizerConfig optimizer;
  bool start_fallback = false;
};
TrialSetup make_trial(const ExperimentConfig& cfg, const GridMap& map, const StartRegionSet& regions,
                      int map_index, int trial, Strategy strategy);

/// Counts constraint violations of a solution under the given problem.
int count_violations(const ProblemSpec& problem, const Solution& sol);

BenchmarkResult run_benchmark(const ExperimentConfig& cfg,
                              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::vector<StrategySummary> summarize(const std::vector<TrialRecord>& rows,
                                       const std::vector<Strategy>& strategies);

/// Writes `map,trial,strategy,team_phi,iters,wall_ms,feasible` rows and the
/// `strategy,mean_phi,std_phi,improvement_pct_vs_SR` summary.
void export_csv(const BenchmarkResult& result, const std::filesystem::path& rows_path,
                const std::filesystem::path& summary_path);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n);

/// Writes the synthetic maps (ERGMAP) and start regions (ERGSTART) to dir.
std::vector<MapFiles> write_synthetic_maps(std::uint64_t seed, int count, int type_count,
                                           std::size_t resolution, const std::filesystem::path& dir);

std::string format_number(double v);

}  // namespace ergodic
