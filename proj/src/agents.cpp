#include "ergodic/agents.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace ergodic {

void AgentSpec::validate() const {
  if (!(u_max > 0.0)) throw ConfigError("agent u_max must be positive");
  if (!(dt > 0.0)) throw ConfigError("agent dt must be positive");
  if (horizon_steps < 1) throw ConfigError("agent horizon_steps must be at least 1");
  if (!(sensor.sigma > 0.0)) throw ConfigError("sensor sigma must be positive");
  if (!(sensor.peak_prob > 0.0) || sensor.peak_prob > 1.0)
    throw ConfigError("sensor peak_prob must lie in (0, 1]");
  if (motion == Motion::DiffDrive) {
    if (!(kappa_max > 0.0)) throw ConfigError("diff-drive kappa_max must be positive");
    if (!(v_min >= 0.0) || v_min > u_max) throw ConfigError("diff-drive v_min must lie in [0, u_max]");
  }
}

PointPath Trajectory::positions() const {
  PointPath out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.position);
  return out;
}

int Trajectory::clamp_count() const {
  return static_cast<int>(std::count(clamped.begin(), clamped.end(), true));
}

bool controls_feasible(const AgentSpec& spec, std::span<const Vec2> u, double tol) {
  for (const auto& c : u) {
    if (!std::isfinite(c.x) || !std::isfinite(c.y)) return false;
    if (spec.motion == Motion::Integrator) {
      if (norm(c) > spec.u_max * (1.0 + tol)) return false;
    } else {
      const double v = c.x;
      if (v < spec.v_min - tol || v > spec.u_max + tol) return false;
      if (std::abs(c.y) > spec.kappa_max * v * (1.0 + tol) + tol) return false;
    }
  }
  return true;
}

ControlSequence project_controls(const AgentSpec& spec, std::span<const Vec2> u) {
  ControlSequence out(u.begin(), u.end());
  for (auto& c : out) {
    if (spec.motion == Motion::Integrator) {
      const double n = norm(c);
      if (n > spec.u_max) c = (spec.u_max / n) * c;
    } else {
      c.x = std::clamp(c.x, spec.v_min, spec.u_max);
      const double w = spec.kappa_max * c.x;
      c.y = std::clamp(c.y, -w, w);
    }
  }
  return out;
}

Trajectory rollout(const AgentSpec& spec, const State& x0, std::span<const Vec2> u, const Domain& domain) {
  if (u.size() != static_cast<std::size_t>(spec.horizon_steps))
    throw PreconditionError("control sequence length must equal horizon_steps");
  if (!controls_feasible(spec, u, 1e-9)) throw PreconditionError("controls violate the agent limits");
  if (!domain.contains(x0.position)) throw DomainError("start position lies outside the domain");

  Trajectory traj;
  traj.dt = spec.dt;
  traj.states.reserve(u.size() + 1);
  traj.clamped.reserve(u.size() + 1);
  traj.states.push_back(x0);
  traj.clamped.push_back(false);
  State s = x0;
  for (const auto& c : u) {
    Vec2 next;
    if (spec.motion == Motion::Integrator) {
      next = s.position + spec.dt * c;
    } else {
      next = {s.position.x + spec.dt * c.x * std::cos(s.heading),
              s.position.y + spec.dt * c.x * std::sin(s.heading)};
      s.heading += spec.dt * c.y;
    }
    s.position = domain.clamp(next);
    traj.states.push_back(s);
    traj.clamped.push_back(!(s.position == next));
  }
  return traj;
}

RolloutGradient rollout_vjp(const AgentSpec& spec, const Trajectory& traj, std::span<const Vec2> u,
                            std::span<const Vec2> point_gradients) {
  const std::size_t steps = u.size();
  if (traj.states.size() != steps + 1 || point_gradients.size() != steps + 1)
    throw PreconditionError("need one point gradient per trajectory sample");

  RolloutGradient g;
  g.controls.resize(steps);
  // Adjoint of (x, y, heading) at the state after the current step.
  Vec2 lam = point_gradients[steps];
  double lam_heading = 0.0;
  for (std::size_t j = steps; j-- > 0;) {
    if (spec.motion == Motion::Integrator) {
      g.controls[j] = spec.dt * lam;
    } else {
      const double th = traj.states[j].heading;
      const double v = u[j].x;
      const double c = std::cos(th);
      const double s = std::sin(th);
      g.controls[j] = {spec.dt * (lam.x * c + lam.y * s), spec.dt * lam_heading};
      lam_heading += spec.dt * v * (lam.y * c - lam.x * s);
    }
    lam += point_gradients[j];
  }
  g.start.position = lam;
  g.start.heading = spec.motion == Motion::DiffDrive ? lam_heading : 0.0;
  return g;
}

RolloutGradient rollout_vjp(const AgentSpec& spec, const State& x0, std::span<const Vec2> u,
                            const Domain& domain, std::span<const Vec2> point_gradients) {
  return rollout_vjp(spec, rollout(spec, x0, u, domain), u, point_gradients);
}

GridMap coverage_reconstruction(const Trajectory& traj, const SensorModel& sensor, const Domain& domain,
                                std::size_t nx, std::size_t ny) {
  if (nx < 2 || ny < 2) throw PreconditionError("coverage grid needs at least 2 cells per axis");
  GridMap out(nx, ny, domain);
  if (traj.states.empty()) return out;
  const double inv_two_var = 1.0 / (2.0 * sensor.sigma * sensor.sigma);
  const double scale = sensor.peak_prob / static_cast<double>(traj.states.size());
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Vec2 m = out.midpoint(ix, iy);
      double acc = 0.0;
      for (const auto& s : traj.states) {
        const Vec2 d = m - s.position;
        acc += std::exp(-dot(d, d) * inv_two_var);
      }
      out.at(ix, iy) = scale * acc;
    }
  }
  return out;
}

double max_discrete_curvature(const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < traj.states.size(); ++j) {
    if (traj.clamped[j + 1]) continue;
    const double len = distance(traj.states[j + 1].position, traj.states[j].position);
    if (len <= 0.0) continue;
    worst = std::max(worst, std::abs(traj.states[j + 1].heading - traj.states[j].heading) / len);
  }
  return worst;
}

void save_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  auto num = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  out << "ERGTRAJ 1\n";
  for (const auto& r : records) {
    const auto& states = r.trajectory.states;
    out << "agent " << r.agent_id << ' ' << r.type_id << ' ' << states.size() << '\n';
    for (const auto& s : states) {
      out << num(s.position.x) << ' ' << num(s.position.y);
      if (r.motion == Motion::DiffDrive) out << ' ' << num(s.heading);
      out << '\n';
    }
  }
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace ergodic
