#include "elastic_ds/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "elastic_ds/errors.hpp"

namespace elastic_ds {

namespace {

template <typename Field>
Vec integrate_step(const Field& f, const Vec& x, double dt, Integrator integrator) {
  if (integrator == Integrator::kEuler) return x + dt * f(x);
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + 0.5 * dt * k1));
  const Vec k3 = f(Vec(x + 0.5 * dt * k2));
  const Vec k4 = f(Vec(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double median(std::vector<double> v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

double direction_cosine(const Vec& from, const Vec& to, const Vec& axis) {
  const Vec v = to - from;
  const double n = v.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::kDegenerateDirection, "consecutive samples coincide");
  return std::clamp(v.dot(axis) / (n * axis.norm()), -1.0, 1.0);
}

}  // namespace

void RolloutConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rollout dt must be positive");
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  if (!(convergence_radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "convergence radius must be positive");
}

RolloutConfig RolloutConfig::for_workspace(double diameter) {
  RolloutConfig cfg;
  cfg.convergence_radius = 1e-3 * diameter;
  return cfg;
}

Rollout rollout(const LpvDsPolicy& policy, const Vec& x0, const RolloutConfig& cfg) {
  cfg.validate();
  if (!x0.allFinite() || x0.size() != policy.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "rollout start is not a finite point of the policy dimension");
  }
  auto f = [&policy](const Vec& x) { return policy.evaluate(x); };
  Points pts{x0};
  Points vel{f(x0)};
  bool converged = false;
  Vec x = x0;
  for (int step = 0; step < cfg.max_steps; ++step) {
    x = integrate_step(f, x, cfg.dt, cfg.integrator);
    if (!x.allFinite()) {
      throw Error(ErrorCode::kNonFiniteState, "state diverged at step " + std::to_string(step));
    }
    pts.push_back(x);
    vel.push_back(f(x));
    if ((x - policy.attractor()).norm() < cfg.convergence_radius) {
      converged = true;
      break;
    }
  }
  std::vector<double> t(pts.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * cfg.dt;
  const std::size_t n = pts.size();
  return Rollout{Trajectory(std::move(pts), std::move(t), std::move(vel)), converged, std::vector<int>(n, 0)};
}

Rollout rollout(PlanExecutor& executor, const Vec& x0, const RolloutConfig& cfg) {
  cfg.validate();
  if (!x0.allFinite()) throw Error(ErrorCode::kInvalidArgument, "rollout start is not finite");
  const auto& plan = executor.plan();
  Points pts{x0};
  PlanStep first = executor.step(x0);
  Points vel{first.velocity};
  std::vector<int> active{first.active_segment};
  bool converged = false;
  Vec x = x0;
  const int last = static_cast<int>(plan.segments().size()) - 1;
  for (int step = 0; step < cfg.max_steps; ++step) {
    const LpvDsPolicy& policy = executor.active_policy();
    x = integrate_step([&policy](const Vec& y) { return policy.evaluate(y); }, x, cfg.dt, cfg.integrator);
    if (!x.allFinite()) {
      throw Error(ErrorCode::kNonFiniteState, "state diverged at step " + std::to_string(step));
    }
    const PlanStep s = executor.step(x);
    pts.push_back(x);
    vel.push_back(s.velocity);
    active.push_back(s.active_segment);
    if (s.active_segment == last && (x - plan.final_attractor()).norm() < cfg.convergence_radius) {
      converged = true;
      break;
    }
  }
  std::vector<double> t(pts.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * cfg.dt;
  return Rollout{Trajectory(std::move(pts), std::move(t), std::move(vel)), converged, std::move(active)};
}

double workspace_diameter(const Points& points) {
  if (points.empty()) return 0.0;
  Vec lo = points.front();
  Vec hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

double start_cosine(const Trajectory& traj, const GeometricDescriptor& descriptor) {
  if (!descriptor.enter) throw Error(ErrorCode::kInvalidArgument, "descriptor has no enter pose");
  return direction_cosine(traj.points()[0], traj.points()[1], descriptor.enter->x_axis());
}

double goal_cosine(const Trajectory& traj, const GeometricDescriptor& descriptor) {
  if (!descriptor.exit) throw Error(ErrorCode::kInvalidArgument, "descriptor has no exit pose");
  const auto& p = traj.points();
  return direction_cosine(p[p.size() - 2], p[p.size() - 1], descriptor.exit->x_axis());
}

double endpoints_distance(const Trajectory& traj, const Pose& o_start, const Pose& o_end) {
  return (traj.front() - o_start.position).norm() + (traj.back() - o_end.position).norm();
}

std::vector<FieldSample> sample_field(const LpvDsPolicy& policy, const FieldGrid& grid) {
  if (grid.nx < 2 || grid.ny < 2) throw Error(ErrorCode::kInvalidArgument, "field resolution must be >= 2");
  const int d = policy.dim();
  if (grid.lower.size() < 2 || grid.upper.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "field bounds need two coordinates");
  }
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(grid.nx * grid.ny));
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double y = grid.lower(1) + (grid.upper(1) - grid.lower(1)) * iy / (grid.ny - 1);
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.lower(0) + (grid.upper(0) - grid.lower(0)) * ix / (grid.nx - 1);
      Vec p(d);
      p(0) = x;
      p(1) = y;
      if (d == 3) p(2) = grid.slice;
      out.push_back(FieldSample{p, policy.evaluate(p)});
    }
  }
  return out;
}

AdaptationReport evaluate_adaptation(const LpvDsPolicy& policy, const GeometricDescriptor& descriptor,
                                     const RolloutConfig& cfg) {
  if (!descriptor.enter || !descriptor.exit) {
    throw Error(ErrorCode::kInvalidArgument, "metrics need both enter and exit poses");
  }
  const Rollout r = rollout(policy, descriptor.enter->position, cfg);
  AdaptationReport rep;
  rep.start_cos = start_cosine(r.trajectory, descriptor);
  rep.goal_cos = goal_cosine(r.trajectory, descriptor);
  rep.endpoints_distance = endpoints_distance(r.trajectory, *descriptor.enter, *descriptor.exit);
  rep.converged = r.converged;
  rep.num_components = static_cast<int>(policy.size());
  return rep;
}

AdaptationReport bench_adaptation(const Trajectory& demo, const GeometricDescriptor& descriptor, int repeats,
                                  const TrainConfig& cfg) {
  if (repeats < 1) throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  const Skill skill = train(demo, cfg);
  std::vector<double> transform, profile, estimate, total;
  std::optional<Adaptation> last;
  for (int r = 0; r < repeats; ++r) {
    auto a = adapt(skill, descriptor, cfg.adapt);
    transform.push_back(a.transform_seconds);
    profile.push_back(a.profile_seconds);
    estimate.push_back(a.estimate_seconds);
    total.push_back(a.total_seconds());
    last = std::move(a);
  }
  GeometricDescriptor full = descriptor;
  if (!full.enter) full.enter = last->skill.chain.enter_frame();
  if (!full.exit) full.exit = last->skill.chain.exit_frame();
  AdaptationReport rep = evaluate_adaptation(last->skill.policy, full,
                                             RolloutConfig::for_workspace(workspace_diameter(demo.points())));
  rep.transform_seconds = median(transform);
  rep.profile_seconds = median(profile);
  rep.estimate_seconds = median(estimate);
  rep.total_seconds = median(total);
  rep.train_seconds = skill.fit_seconds;
  return rep;
}

}  // namespace elastic_ds
