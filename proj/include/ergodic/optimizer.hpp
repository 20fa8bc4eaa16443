/**
 * @file optimizer.hpp
 * @brief Projected-gradient ergodic trajectory optimization with optional
 *        joint optimization of start locations.
 *
 * Decision variables per agent are the start position, the initial heading
 * (differential-drive agents only) and one control per step. Every iterate
 * is projected back onto the feasible set: controls through
 * project_controls, starts through project_to_regions (or cyclic projection
 * for a start shared by several agent types). Steps are accepted by Armijo
 * backtracking on the true objective, so the objective trace never rises.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ergodic/agents.hpp"
#include "ergodic/allocation.hpp"
#include "ergodic/grid_map.hpp"
#include "ergodic/maps.hpp"
#include "ergodic/spectral.hpp"

namespace ergodic {

enum class StartMode { Fixed, SharedOptimized, PerAgentOptimized };

const char* to_string(StartMode mode);

struct ProblemSpec {
  GridMap map;
  BasisSpec basis{Domain{}, 10};
  std::vector<AgentSpec> agents;
  StartRegionSet regions;
  StartMode mode = StartMode::PerAgentOptimized;
  /// One position per agent; required in Fixed mode.
  std::vector<Vec2> fixed_starts;

  /// Throws PreconditionError/ConfigError when the problem is malformed.
  void validate() const;
  std::vector<int> type_ids() const;
};

struct OptimizerConfig {
  int max_iters = 300;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  double tol = 1e-7;
  int restarts = 8;
  std::uint64_t seed = 0;
  int max_backtracks = 40;

  void validate() const;
};

struct Evaluation {
  /// All agents against the full-map coefficients.
  double team = 0.0;
  /// Per band (widest sensor first) against the band target.
  std::vector<int> type_ids;
  std::vector<double> per_type;
};

struct Solution {
  std::vector<State> starts;
  std::vector<ControlSequence> controls;
  std::vector<Trajectory> trajectories;
  double metric = 0.0;
  std::vector<int> type_ids;
  std::vector<double> type_metrics;
  /// Planning objective per accepted iteration, starting at the initial guess.
  std::vector<double> metric_trace;
  std::vector<int> clamp_counts;
  int iterations = 0;
  int best_restart = 0;
  std::vector<double> restart_metrics;
  /// Every random number consumed for control initialization, in draw order.
  std::vector<double> draw_log;
};

/**
 * Targets shared by every restart: full-map coefficients, the band partition
 * and per-band targets.
 */
class PlanningContext {
 public:
  explicit PlanningContext(const ProblemSpec& problem);

  const ProblemSpec& problem() const { return *problem_; }
  const CoefficientVector& xi() const { return xi_; }
  const BandPartition& partition() const { return partition_; }
  const std::vector<CoefficientVector>& targets() const { return targets_; }
  /// Agent indices per band.
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

 private:
  const ProblemSpec* problem_;
  CoefficientVector xi_;
  BandPartition partition_;
  std::vector<CoefficientVector> targets_;
  std::vector<std::vector<std::size_t>> groups_;
};

Solution plan(const ProblemSpec& problem, const OptimizerConfig& config);

Evaluation evaluate(const ProblemSpec& problem, const std::vector<State>& starts,
                    const std::vector<ControlSequence>& controls);
Evaluation evaluate(const PlanningContext& ctx, const std::vector<State>& starts,
                    const std::vector<ControlSequence>& controls);

struct TeamGradient {
  double metric = 0.0;
  std::vector<State> starts;
  std::vector<ControlSequence> controls;
};

/// Team metric and its exact gradient with respect to starts and controls.
TeamGradient team_gradient(const PlanningContext& ctx, const std::vector<State>& starts,
                           const std::vector<ControlSequence>& controls);

struct GradientReport {
  int instances = 0;
  /// max over instances of |analytic - fd|_inf / |fd|_inf
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

/// Central finite differences (step 1e-5) of the team metric against team_gradient.
double gradient_check(const ProblemSpec& problem, const std::vector<State>& starts,
                      const std::vector<ControlSequence>& controls, double step = 1e-5);

/// Small randomized instance (T <= 15, K <= 5, N <= 3) with interior starts
/// and strictly feasible controls that never touch the domain boundary.
struct GradientInstance {
  ProblemSpec problem;
  std::vector<State> starts;
  std::vector<ControlSequence> controls;
};
GradientInstance random_gradient_instance(std::uint64_t seed, Motion motion);

/// Runs random_gradient_instance + gradient_check for seeds seed .. seed+count-1.
GradientReport gradient_check_suite(std::uint64_t seed, Motion motion, int count);

/// Deterministic 64-bit mixing of a base seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ergodic
