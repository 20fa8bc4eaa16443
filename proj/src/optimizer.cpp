#include "ergodic/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace ergodic {
namespace {

struct Iterate {
  std::vector<State> starts;
  std::vector<ControlSequence> controls;
};

std::vector<Trajectory> rollout_all(const ProblemSpec& p, const Iterate& it) {
  std::vector<Trajectory> out;
  out.reserve(p.agents.size());
  for (std::size_t i = 0; i < p.agents.size(); ++i)
    out.push_back(rollout(p.agents[i], it.starts[i], it.controls[i], p.map.domain()));
  return out;
}

/**
 * Metric of one agent group against a target; when grad is given, the
 * group's start and control gradients are written into it.
 */
double group_objective(const ProblemSpec& p, const std::vector<std::size_t>& group,
                       const std::vector<Trajectory>& trajs, const Iterate& it,
                       std::span<const double> target, Iterate* grad) {
  std::vector<PointPath> paths;
  paths.reserve(group.size());
  for (std::size_t i : group) paths.push_back(trajs[i].positions());
  if (grad == nullptr) return ergodic_metric_and_gradient(paths, target, p.basis, nullptr);

  std::vector<PointPath> point_grads;
  const double phi = ergodic_metric_and_gradient(paths, target, p.basis, &point_grads);
  for (std::size_t g = 0; g < group.size(); ++g) {
    const std::size_t i = group[g];
    RolloutGradient rg = rollout_vjp(p.agents[i], trajs[i], it.controls[i], point_grads[g]);
    grad->starts[i] = rg.start;
    grad->controls[i] = std::move(rg.controls);
  }
  return phi;
}

Iterate zero_like(const Iterate& it) {
  Iterate z;
  z.starts.assign(it.starts.size(), State{});
  z.controls.resize(it.controls.size());
  for (std::size_t i = 0; i < it.controls.size(); ++i) z.controls[i].assign(it.controls[i].size(), Vec2{});
  return z;
}

/// Everything one evaluation of the planning objective produces.
struct Evaluated {
  double value = 0.0;
  std::vector<Trajectory> trajectories;
  /// d objective / d sample, per agent.
  std::vector<PointPath> point_grads;
  /// d objective / d (start, controls).
  Iterate grad;
};

/// Sum over bands of each band's metric against its own target.
double planning_objective(const PlanningContext& ctx, const Iterate& it, Evaluated* out) {
  const ProblemSpec& p = ctx.problem();
  auto trajs = rollout_all(p, it);
  double total = 0.0;
  if (out == nullptr) {
    for (std::size_t b = 0; b < ctx.groups().size(); ++b)
      total += group_objective(p, ctx.groups()[b], trajs, it, ctx.targets()[b], nullptr);
    return total;
  }
  out->grad = zero_like(it);
  out->point_grads.assign(p.agents.size(), {});
  for (std::size_t b = 0; b < ctx.groups().size(); ++b) {
    const auto& group = ctx.groups()[b];
    std::vector<PointPath> paths;
    for (std::size_t i : group) paths.push_back(trajs[i].positions());
    std::vector<PointPath> pg;
    total += ergodic_metric_and_gradient(paths, ctx.targets()[b], p.basis, &pg);
    for (std::size_t g = 0; g < group.size(); ++g) {
      const std::size_t i = group[g];
      RolloutGradient rg = rollout_vjp(p.agents[i], trajs[i], it.controls[i], pg[g]);
      out->grad.starts[i] = rg.start;
      out->grad.controls[i] = std::move(rg.controls);
      out->point_grads[i] = std::move(pg[g]);
    }
  }
  for (std::size_t i = 0; i < p.agents.size(); ++i)
    if (p.agents[i].motion == Motion::Integrator) out->grad.starts[i].heading = 0.0;
  out->value = total;
  out->trajectories = std::move(trajs);
  return total;
}

double team_objective(const PlanningContext& ctx, const Iterate& it, Iterate* grad) {
  const ProblemSpec& p = ctx.problem();
  const auto trajs = rollout_all(p, it);
  std::vector<std::size_t> everyone(p.agents.size());
  for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = i;
  if (grad) *grad = zero_like(it);
  return group_objective(p, everyone, trajs, it, ctx.xi(), grad);
}

double inner(const Iterate& a, const Iterate& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.starts.size(); ++i) {
    s += dot(a.starts[i].position, b.starts[i].position) + a.starts[i].heading * b.starts[i].heading;
    for (std::size_t j = 0; j < a.controls[i].size(); ++j) s += dot(a.controls[i][j], b.controls[i][j]);
  }
  return s;
}

Iterate difference(const Iterate& a, const Iterate& b) {
  Iterate d = a;
  for (std::size_t i = 0; i < a.starts.size(); ++i) {
    d.starts[i].position -= b.starts[i].position;
    d.starts[i].heading -= b.starts[i].heading;
    for (std::size_t j = 0; j < a.controls[i].size(); ++j) d.controls[i][j] -= b.controls[i][j];
  }
  return d;
}

class Stepper {
 public:
  explicit Stepper(const ProblemSpec& p) : p_(p), types_(p.type_ids()) {}

  /// x + s * d projected onto the feasible set; false if no feasible shared
  /// start could be found. In shared mode every agent's start entry of d is
  /// the same shared displacement.
  bool step(const Iterate& x, const Iterate& d, double s, Iterate* out) const {
    *out = x;
    const std::size_t n = p_.agents.size();
    for (std::size_t i = 0; i < n; ++i) {
      const AgentSpec& a = p_.agents[i];
      if (a.motion == Motion::DiffDrive) out->starts[i].heading += s * d.starts[i].heading;
      ControlSequence u = x.controls[i];
      for (std::size_t j = 0; j < u.size(); ++j) u[j] += s * d.controls[i][j];
      out->controls[i] = project_controls(a, u);
    }
    switch (p_.mode) {
      case StartMode::Fixed:
        break;
      case StartMode::PerAgentOptimized:
        for (std::size_t i = 0; i < n; ++i) {
          const Vec2 moved = x.starts[i].position + s * d.starts[i].position;
          out->starts[i].position = project_to_regions(moved, p_.regions, p_.agents[i].type_id);
        }
        break;
      case StartMode::SharedOptimized: {
        Vec2 shared;
        if (!cyclic_project(x.starts[0].position + s * d.starts[0].position, p_.regions, types_, &shared))
          return false;
        for (std::size_t i = 0; i < n; ++i) out->starts[i].position = shared;
        break;
      }
    }
    return true;
  }

 private:
  const ProblemSpec& p_;
  std::vector<int> types_;
};

/// Steepest descent in the decision variables (the fallback direction).
Iterate gradient_direction(const ProblemSpec& p, const Iterate& grad) {
  Iterate d = grad;
  Vec2 shared;
  for (std::size_t i = 0; i < d.starts.size(); ++i) {
    d.starts[i].position = -1.0 * d.starts[i].position;
    d.starts[i].heading = -d.starts[i].heading;
    shared += d.starts[i].position;
    for (auto& c : d.controls[i]) c = -1.0 * c;
  }
  if (p.mode == StartMode::SharedOptimized)
    for (auto& s : d.starts) s.position = shared;
  return d;
}

/**
 * Gauss-Newton direction in sample space: every trajectory sample should move
 * by minus its own point gradient, and the linearized rollout is inverted to
 * find the start and control changes that produce that displacement. Cheap
 * (linear in the horizon) and far better conditioned than the raw control
 * gradient, whose cumulative structure makes early controls dominate.
 */
Iterate sample_space_direction(const ProblemSpec& p, const Iterate& x, const Evaluated& ev) {
  const std::size_t n = p.agents.size();
  Iterate d = zero_like(x);

  // Start moves are replaced by their feasible first-order part (a tiny
  // projected step, rescaled) so the control plan builds on where the
  // start can actually go.
  const double side = std::min(p.map.domain().width, p.map.domain().height);
  auto feasible_move = [&](const Vec2& from, const Vec2& move, auto&& project) {
    const double m = norm(move);
    if (m == 0.0) return Vec2{};
    const double eps = 1e-7 * side / m;
    Vec2 to;
    if (!project(from + eps * move, &to)) return Vec2{};
    return (1.0 / eps) * (to - from);
  };
  Vec2 shared;
  if (p.mode == StartMode::SharedOptimized) {
    for (std::size_t i = 0; i < n; ++i) shared -= ev.point_grads[i][0];
    shared = (1.0 / static_cast<double>(n)) * shared;
    const auto types = p.type_ids();
    shared = feasible_move(x.starts[0].position, shared, [&](const Vec2& q, Vec2* out) {
      return cyclic_project(q, p.regions, types, out);
    });
  }

  for (std::size_t i = 0; i < n; ++i) {
    const AgentSpec& a = p.agents[i];
    const PointPath& g = ev.point_grads[i];
    const auto& states = ev.trajectories[i].states;
    Vec2 start_move;
    switch (p.mode) {
      case StartMode::Fixed:
        break;
      case StartMode::PerAgentOptimized:
        start_move = feasible_move(x.starts[i].position, -1.0 * g[0], [&](const Vec2& q, Vec2* out) {
          *out = project_to_regions(q, p.regions, a.type_id);
          return true;
        });
        break;
      case StartMode::SharedOptimized:
        start_move = shared;
        break;
    }
    d.starts[i].position = start_move;

    const std::size_t steps = x.controls[i].size();
    constexpr double kActive = 1.0 - 1e-9;
    // Samples are tracked greedily: each step aims at the desired position
    // from where the previous (constraint-limited) step actually lands, so
    // speed bounds that are already active do not corrupt later steps.
    if (a.motion == Motion::Integrator) {
      Vec2 realized = start_move;
      for (std::size_t j = 0; j < steps; ++j) {
        Vec2 du = (1.0 / a.dt) * (-1.0 * g[j + 1] - realized);
        const Vec2 u = x.controls[i][j];
        const double un = norm(u);
        if (un >= kActive * a.u_max && dot(du, u) > 0.0) du -= (dot(du, u) / (un * un)) * u;
        d.controls[i][j] = du;
        realized += a.dt * du;
      }
      continue;
    }

    // Diff-drive: split each increment into along-track (speed) and
    // cross-track (heading) parts, then difference the headings for omega.
    const double damping = (0.05 * a.u_max) * (0.05 * a.u_max);
    std::vector<double> dheading(steps);
    Vec2 realized = start_move;
    for (std::size_t j = 0; j < steps; ++j) {
      const Vec2 inc = (1.0 / a.dt) * (-1.0 * g[j + 1] - realized);
      const double th = states[j].heading;
      const Vec2 along{std::cos(th), std::sin(th)};
      const Vec2 across{-along.y, along.x};
      const double v = x.controls[i][j].x;
      double dv = dot(along, inc);
      if ((v >= kActive * a.u_max && dv > 0.0) || (v <= a.v_min + (1.0 - kActive) * a.u_max && dv < 0.0)) dv = 0.0;
      d.controls[i][j].x = dv;
      dheading[j] = v * dot(across, inc) / (v * v + damping);
      realized += a.dt * (dv * along + v * dheading[j] * across);
    }
    d.starts[i].heading = dheading[0];
    for (std::size_t j = 0; j + 1 < steps; ++j) d.controls[i][j].y = (dheading[j + 1] - dheading[j]) / a.dt;
    d.controls[i][steps - 1].y = 0.0;
  }
  return d;
}

/// <a, b> over all trajectory samples.
double sample_inner(const std::vector<PointPath>& a, const std::vector<PointPath>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += dot(a[i][j], b[i][j]);
  return s;
}

std::vector<PointPath> sample_diff(const std::vector<Trajectory>& a, const std::vector<Trajectory>& b) {
  std::vector<PointPath> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i].resize(a[i].states.size());
    for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] = a[i].states[j].position - b[i].states[j].position;
  }
  return out;
}

std::vector<PointPath> grad_diff(const std::vector<PointPath>& a, const std::vector<PointPath>& b) {
  std::vector<PointPath> out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] -= b[i][j];
  return out;
}

double max_point_grad(const std::vector<PointPath>& g) {
  double m = 0.0;
  for (const auto& path : g)
    for (const auto& v : path) m = std::max(m, norm(v));
  return m;
}

double heading_towards(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  if (d.x == 0.0 && d.y == 0.0) return 0.0;
  return std::atan2(d.y, d.x);
}

std::string join_types(const std::vector<int>& types) {
  std::string s;
  for (std::size_t i = 0; i < types.size(); ++i) s += (i ? ", " : "") + std::to_string(types[i]);
  return s;
}

constexpr double kMinStep = 1e-12;
constexpr double kMaxStep = 1e12;

struct RestartResult {
  Iterate best;
  std::vector<double> trace;
  int iterations = 0;
  double team = 0.0;
};

Iterate initial_iterate(const PlanningContext& ctx, const OptimizerConfig& cfg, int restart,
                        std::vector<double>* draw_log) {
  const ProblemSpec& p = ctx.problem();
  const std::size_t n = p.agents.size();
  Rng start_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart), 1));
  Rng control_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart), 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Iterate it;
  it.starts.resize(n);
  switch (p.mode) {
    case StartMode::Fixed:
      for (std::size_t i = 0; i < n; ++i) it.starts[i].position = p.fixed_starts[i];
      break;
    case StartMode::PerAgentOptimized:
      for (std::size_t i = 0; i < n; ++i)
        it.starts[i].position = sample_start(p.regions, p.agents[i].type_id, start_rng);
      break;
    case StartMode::SharedOptimized: {
      const auto types = p.type_ids();
      const auto common = common_regions(p.regions, types);
      if (common.empty())
        throw InfeasibleError("no start location is viable for every agent type (types " +
                              join_types(types) + ")");
      const Vec2 shared = sample_in_rects(common, start_rng);
      for (std::size_t i = 0; i < n; ++i) it.starts[i].position = shared;
      break;
    }
  }

  const Vec2 centroid = p.map.centroid();
  it.controls.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentSpec& a = p.agents[i];
    if (a.motion == Motion::DiffDrive) it.starts[i].heading = heading_towards(it.starts[i].position, centroid);
    ControlSequence u(static_cast<std::size_t>(a.horizon_steps));
    // A per-agent drift direction keeps co-located agents from moving as one.
    const double drift =
        2.0 * std::numbers::pi * (unit(control_rng) + static_cast<double>(i) / static_cast<double>(n));
    if (draw_log) draw_log->push_back(drift);
    for (auto& c : u) {
      const double r1 = unit(control_rng);
      const double r2 = unit(control_rng);
      if (draw_log) {
        draw_log->push_back(r1);
        draw_log->push_back(r2);
      }
      if (a.motion == Motion::Integrator) {
        const double mag = 0.1 * a.u_max * (0.5 + 0.5 * r1);
        const double ang = drift + 0.25 * std::numbers::pi * (r2 - 0.5);
        c = {mag * std::cos(ang), mag * std::sin(ang)};
      } else {
        const double v = std::max(a.v_min, 0.1 * a.u_max * r1);
        c = {v, (2.0 * r2 - 1.0) * a.kappa_max * v};
      }
    }
    it.controls[i] = project_controls(a, u);
  }
  return it;
}

/**
 * An integrator pushing into a wall has zero gradient along the wall normal,
 * so it can stay pinned there forever. Replacing each clamped control by the
 * displacement it actually produced leaves the path unchanged (and the
 * control no larger) but makes the normal direction live again.
 */
bool unpin_wall_controls(const ProblemSpec& p, const std::vector<Trajectory>& trajs, Iterate* x) {
  bool changed = false;
  for (std::size_t i = 0; i < p.agents.size(); ++i) {
    const AgentSpec& a = p.agents[i];
    if (a.motion != Motion::Integrator) continue;
    const auto& t = trajs[i];
    for (std::size_t j = 0; j + 1 < t.states.size(); ++j) {
      if (!t.clamped[j + 1]) continue;
      Vec2 u = (1.0 / a.dt) * (t.states[j + 1].position - t.states[j].position);
      if (norm(u) > a.u_max) u = (a.u_max / norm(u)) * u;
      x->controls[i][j] = u;
      changed = true;
    }
  }
  return changed;
}

struct LineSearch {
  bool accepted = false;
  double step = 0.0;
  double value = 0.0;
};

LineSearch armijo_search(const PlanningContext& ctx, const OptimizerConfig& cfg, const Stepper& stepper,
                         const Iterate& x, const Evaluated& ev, const Iterate& d, double s, Iterate* cand) {
  LineSearch ls;
  for (int bt = 0; bt < cfg.max_backtracks; ++bt, s *= cfg.backtrack) {
    if (!stepper.step(x, d, s, cand)) continue;
    const double f_new = planning_objective(ctx, *cand, nullptr);
    const double slope = inner(ev.grad, difference(*cand, x));
    if (f_new <= ev.value + cfg.armijo * std::min(0.0, slope) && f_new <= ev.value) {
      ls.accepted = true;
      ls.step = s;
      ls.value = f_new;
      return ls;
    }
  }
  return ls;
}

RestartResult run_restart(const PlanningContext& ctx, const OptimizerConfig& cfg, int restart,
                          std::vector<double>* draw_log) {
  const ProblemSpec& p = ctx.problem();
  const Stepper stepper(p);
  RestartResult res;
  Iterate x = initial_iterate(ctx, cfg, restart, draw_log);
  Evaluated ev;
  planning_objective(ctx, x, &ev);
  res.trace.push_back(ev.value);

  // First trial step moves the sample with the largest gradient by
  // initial_step * 5% of the shorter domain side; afterwards the
  // Barzilai-Borwein ratio over sample displacements and point gradients.
  const double side = std::min(p.map.domain().width, p.map.domain().height);
  const double gmax = max_point_grad(ev.point_grads);
  double trial = gmax > 0.0 ? cfg.initial_step * 0.05 * side / gmax : cfg.initial_step;

  Iterate cand;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    LineSearch ls = armijo_search(ctx, cfg, stepper, x, ev, sample_space_direction(p, x, ev), trial, &cand);
    if (!ls.accepted) {
      // Projection can spoil the preconditioned direction near active
      // constraints; plain projected gradient is still a descent step.
      const double gnorm = std::sqrt(inner(ev.grad, ev.grad));
      if (gnorm == 0.0) break;
      ls = armijo_search(ctx, cfg, stepper, x, ev, gradient_direction(p, ev.grad), cfg.initial_step / gnorm * 0.05 * side,
                         &cand);
      if (!ls.accepted) break;
    }
    const double rel = ev.value > 0.0 ? (ev.value - ls.value) / ev.value : 0.0;
    Evaluated next;
    x = std::move(cand);
    planning_objective(ctx, x, &next);
    Iterate unpinned_x = x;
    if (unpin_wall_controls(p, next.trajectories, &unpinned_x)) {
      Evaluated unpinned;
      if (planning_objective(ctx, unpinned_x, &unpinned) <= next.value) {
        x = std::move(unpinned_x);
        next = std::move(unpinned);
      }
    }
    const auto dp = sample_diff(next.trajectories, ev.trajectories);
    const double sy = sample_inner(dp, grad_diff(next.point_grads, ev.point_grads));
    const double ss = sample_inner(dp, dp);
    trial = sy > 0.0 ? std::clamp(ss / sy, kMinStep, kMaxStep) : std::min(2.0 * ls.step, kMaxStep);
    ev = std::move(next);
    res.trace.push_back(ev.value);
    ++res.iterations;
    if (rel < cfg.tol) break;
  }
  res.team = team_objective(ctx, x, nullptr);
  res.best = std::move(x);
  return res;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

const char* to_string(StartMode mode) {
  switch (mode) {
    case StartMode::Fixed:
      return "fixed";
    case StartMode::SharedOptimized:
      return "shared";
    case StartMode::PerAgentOptimized:
      return "per-agent";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

std::vector<int> ProblemSpec::type_ids() const {
  std::vector<int> ids;
  for (const auto& a : agents)
    if (std::find(ids.begin(), ids.end(), a.type_id) == ids.end()) ids.push_back(a.type_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void ProblemSpec::validate() const {
  if (agents.empty()) throw ConfigError("problem needs at least one agent");
  for (const auto& a : agents) a.validate();
  if (!(map.domain() == basis.domain())) throw PreconditionError("map and basis cover different domains");
  if (!(regions.domain() == map.domain())) throw PreconditionError("start regions use a different domain");
  for (int t : type_ids())
    if (!regions.has_type(t)) throw ConfigError("no start regions for agent type " + std::to_string(t));
  if (mode == StartMode::Fixed) {
    if (fixed_starts.size() != agents.size())
      throw PreconditionError("fixed-start mode needs exactly one start per agent");
    for (std::size_t i = 0; i < agents.size(); ++i)
      if (!regions.contains(agents[i].type_id, fixed_starts[i]))
        throw PreconditionError("fixed start of agent " + std::to_string(i) +
                                " lies outside its type's start regions");
  }
}

void OptimizerConfig::validate() const {
  if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack factor must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("armijo parameter must lie in (0, 1)");
  if (!(tol >= 0.0)) throw ConfigError("tol must be nonnegative");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  if (max_backtracks < 1) throw ConfigError("max_backtracks must be at least 1");
}

PlanningContext::PlanningContext(const ProblemSpec& problem)
    : problem_(&problem), xi_(map_coefficients(problem.map, problem.basis)) {
  partition_ = partition_bands(problem.basis, xi_, problem.agents);
  targets_ = band_targets(xi_, partition_, problem.basis);
  groups_.resize(partition_.size());
  for (std::size_t i = 0; i < problem.agents.size(); ++i)
    groups_[partition_.band_of_type(problem.agents[i].type_id)].push_back(i);
}

Evaluation evaluate(const PlanningContext& ctx, const std::vector<State>& starts,
                    const std::vector<ControlSequence>& controls) {
  const ProblemSpec& p = ctx.problem();
  if (starts.size() != p.agents.size() || controls.size() != p.agents.size())
    throw PreconditionError("need one start and one control sequence per agent");
  for (std::size_t i = 0; i < p.agents.size(); ++i) {
    if (!p.regions.contains(p.agents[i].type_id, starts[i].position))
      throw PreconditionError("start of agent " + std::to_string(i) + " lies outside its start regions");
    if (!controls_feasible(p.agents[i], controls[i], 1e-9))
      throw PreconditionError("controls of agent " + std::to_string(i) + " violate the agent limits");
  }
  const Iterate it{starts, controls};
  const auto trajs = rollout_all(p, it);
  Evaluation ev;
  ev.team = team_objective(ctx, it, nullptr);
  ev.type_ids = ctx.partition().type_ids;
  for (std::size_t b = 0; b < ctx.groups().size(); ++b)
    ev.per_type.push_back(group_objective(p, ctx.groups()[b], trajs, it, ctx.targets()[b], nullptr));
  return ev;
}

Evaluation evaluate(const ProblemSpec& problem, const std::vector<State>& starts,
                    const std::vector<ControlSequence>& controls) {
  problem.validate();
  const PlanningContext ctx(problem);
  return evaluate(ctx, starts, controls);
}

Solution plan(const ProblemSpec& problem, const OptimizerConfig& config) {
  problem.validate();
  config.validate();
  const PlanningContext ctx(problem);

  Solution sol;
  RestartResult best;
  for (int r = 0; r < config.restarts; ++r) {
    RestartResult res = run_restart(ctx, config, r, &sol.draw_log);
    sol.restart_metrics.push_back(res.team);
    if (r == 0 || res.team < best.team) {
      best = std::move(res);
      sol.best_restart = r;
    }
  }

  sol.starts = best.best.starts;
  sol.controls = best.best.controls;
  sol.trajectories = rollout_all(problem, best.best);
  for (const auto& t : sol.trajectories) sol.clamp_counts.push_back(t.clamp_count());
  const Evaluation ev = evaluate(ctx, sol.starts, sol.controls);
  sol.metric = ev.team;
  sol.type_ids = ev.type_ids;
  sol.type_metrics = ev.per_type;
  sol.metric_trace = std::move(best.trace);
  sol.iterations = best.iterations;
  return sol;
}

TeamGradient team_gradient(const PlanningContext& ctx, const std::vector<State>& starts,
                           const std::vector<ControlSequence>& controls) {
  const Iterate it{starts, controls};
  Iterate g;
  TeamGradient out;
  out.metric = team_objective(ctx, it, &g);
  for (std::size_t i = 0; i < ctx.problem().agents.size(); ++i)
    if (ctx.problem().agents[i].motion == Motion::Integrator) g.starts[i].heading = 0.0;
  out.starts = std::move(g.starts);
  out.controls = std::move(g.controls);
  return out;
}

double gradient_check(const ProblemSpec& problem, const std::vector<State>& starts,
                      const std::vector<ControlSequence>& controls, double step) {
  const PlanningContext ctx(problem);
  const TeamGradient analytic = team_gradient(ctx, starts, controls);

  Iterate x{starts, controls};
  auto central = [&](double& var) {
    const double saved = var;
    var = saved + step;
    const double fp = team_objective(ctx, x, nullptr);
    var = saved - step;
    const double fm = team_objective(ctx, x, nullptr);
    var = saved;
    return (fp - fm) / (2.0 * step);
  };

  double max_err = 0.0;
  double max_ref = 0.0;
  auto compare = [&](double a, double fd) {
    max_err = std::max(max_err, std::abs(a - fd));
    max_ref = std::max(max_ref, std::abs(fd));
  };
  for (std::size_t i = 0; i < problem.agents.size(); ++i) {
    compare(analytic.starts[i].position.x, central(x.starts[i].position.x));
    compare(analytic.starts[i].position.y, central(x.starts[i].position.y));
    if (problem.agents[i].motion == Motion::DiffDrive)
      compare(analytic.starts[i].heading, central(x.starts[i].heading));
    for (std::size_t j = 0; j < x.controls[i].size(); ++j) {
      compare(analytic.controls[i][j].x, central(x.controls[i][j].x));
      compare(analytic.controls[i][j].y, central(x.controls[i][j].y));
    }
  }
  if (max_ref == 0.0) return max_err;
  return max_err / max_ref;
}

GradientInstance random_gradient_instance(std::uint64_t seed, Motion motion) {
  Rng rng(derive_seed(seed, 0x67726164ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const Domain domain{1.0, 1.0};
  GradientInstance inst;
  ProblemSpec& p = inst.problem;
  p.map = generate_gmm_map(random_gmm_spec(rng(), domain), 64, 64, domain);
  p.basis = BasisSpec(domain, uniform_int(2, 5));
  p.regions = StartRegionSet(domain);
  p.regions.add(0, {0.0, 0.0, 1.0, 1.0});
  p.mode = StartMode::Fixed;

  const int agents = uniform_int(1, 3);
  const int steps = uniform_int(5, 15);
  for (int i = 0; i < agents; ++i) {
    AgentSpec a;
    a.type_id = 0;
    a.motion = motion;
    a.u_max = 0.2;
    a.dt = 0.1;
    a.horizon_steps = steps;
    a.kappa_max = 5.0;
    a.v_min = 0.02;
    p.agents.push_back(a);

    // Travel is at most u_max * dt * steps = 0.3, so a start in [0.3, 0.7]^2 stays interior.
    State s;
    s.position = {0.3 + 0.4 * unit(rng), 0.3 + 0.4 * unit(rng)};
    s.heading = motion == Motion::DiffDrive ? (2.0 * unit(rng) - 1.0) * std::numbers::pi : 0.0;
    inst.starts.push_back(s);
    p.fixed_starts.push_back(s.position);

    ControlSequence u(static_cast<std::size_t>(steps));
    for (auto& c : u) {
      if (motion == Motion::Integrator) {
        const double mag = 0.9 * a.u_max * unit(rng);
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        c = {mag * std::cos(ang), mag * std::sin(ang)};
      } else {
        const double v = (0.3 + 0.6 * unit(rng)) * a.u_max;
        c = {v, (1.6 * unit(rng) - 0.8) * a.kappa_max * v};
      }
    }
    inst.controls.push_back(std::move(u));
  }
  return inst;
}

GradientReport gradient_check_suite(std::uint64_t seed, Motion motion, int count) {
  const auto t0 = std::chrono::steady_clock::now();
  GradientReport rep;
  for (int i = 0; i < count; ++i) {
    const GradientInstance inst = random_gradient_instance(seed + static_cast<std::uint64_t>(i), motion);
    rep.max_rel_error = std::max(rep.max_rel_error, gradient_check(inst.problem, inst.starts, inst.controls));
    ++rep.instances;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace ergodic
