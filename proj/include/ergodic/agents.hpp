/**
 * @file agents.hpp
 * @brief Agent motion and sensor models, explicit-Euler rollout, its adjoint,
 *        and control-limit projection.
 */
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ergodic/grid_map.hpp"
#include "ergodic/spectral.hpp"
#include "ergodic/types.hpp"

namespace ergodic {

enum class Motion { Integrator, DiffDrive };

/// Isotropic Gaussian detection footprint.
struct SensorModel {
  double sigma = 0.02;
  double peak_prob = 0.95;

  /// Narrow footprint, high detection probability.
  static SensorModel high_fidelity(double domain_length) { return {0.02 * domain_length, 0.95}; }
  /// Wide footprint, low detection probability.
  static SensorModel low_fidelity(double domain_length) { return {0.08 * domain_length, 0.6}; }
};

struct AgentSpec {
  int type_id = 0;
  Motion motion = Motion::Integrator;
  SensorModel sensor;
  double u_max = 1.0;
  double dt = 0.1;
  int horizon_steps = 100;
  // DiffDrive only.
  double kappa_max = 1.0;
  double v_min = 0.0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct State {
  Vec2 position;
  double heading = 0.0;  // ignored by Integrator agents
  friend bool operator==(const State&, const State&) = default;
};

/// Integrator: (u_x, u_y). DiffDrive: (v, omega). One per step.
using ControlSequence = std::vector<Vec2>;

struct Trajectory {
  /// horizon_steps + 1 states, the start included.
  std::vector<State> states;
  double dt = 0.0;
  /// Per state: position had to be clamped back into the domain.
  std::vector<bool> clamped;

  int clamp_count() const;

  PointPath positions() const;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct RolloutGradient {
  State start;  // d/d position and d/d heading
  std::vector<Vec2> controls;
};

Trajectory rollout(const AgentSpec& spec, const State& x0, std::span<const Vec2> u, const Domain& domain);

/**
 * Pulls per-sample position gradients back to the start state and controls
 * through the rollout recurrence. Domain clamping is treated as identity.
 */
RolloutGradient rollout_vjp(const AgentSpec& spec, const Trajectory& traj, std::span<const Vec2> u,
                            std::span<const Vec2> point_gradients);
RolloutGradient rollout_vjp(const AgentSpec& spec, const State& x0, std::span<const Vec2> u,
                            const Domain& domain, std::span<const Vec2> point_gradients);

ControlSequence project_controls(const AgentSpec& spec, std::span<const Vec2> u);
bool controls_feasible(const AgentSpec& spec, std::span<const Vec2> u, double tol = 1e-12);

/// Average sensor footprint over the trajectory, evaluated at cell midpoints.
GridMap coverage_reconstruction(const Trajectory& traj, const SensorModel& sensor, const Domain& domain,
                                std::size_t nx, std::size_t ny);

/// Largest turning angle per unit length over consecutive unclamped steps.
double max_discrete_curvature(const Trajectory& traj);

struct TrajectoryRecord {
  int agent_id = 0;
  int type_id = 0;
  Motion motion = Motion::Integrator;
  Trajectory trajectory;
};

void save_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& path);

}  // namespace ergodic
