#include "elastic_ds/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "elastic_ds/errors.hpp"

namespace elastic_ds {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// True when the transform left the chain where it was, up to rounding.
bool unchanged(const Skill& skill, const ChainTransform& moved) {
  const auto& j0 = skill.chain.joints;
  double scale = 1.0;
  for (const auto& b : j0) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  for (std::size_t i = 0; i < j0.size(); ++i) {
    if ((j0[i] - moved.chain.joints[i]).cwiseAbs().maxCoeff() > tol) return false;
  }
  const auto& c0 = skill.chain.gmm.components;
  for (std::size_t k = 0; k < c0.size(); ++k) {
    if ((c0[k].mean - moved.components[k].mean).cwiseAbs().maxCoeff() > tol) return false;
    const double cs = std::max(1e-300, c0[k].covariance.cwiseAbs().maxCoeff());
    if ((c0[k].covariance - moved.components[k].covariance).cwiseAbs().maxCoeff() > 1e-12 * cs) return false;
  }
  return true;
}

}  // namespace

Skill learn_on_chain(const ElasticChain& chain, const ProfileConfig& profile, const AdaptConfig& cfg) {
  Trajectory ref = regenerate_profile(chain.joints, profile);
  auto result = estimate_detailed(chain.gmm.components, ref.points(), *ref.velocities(), chain.joints.back(),
                                  cfg.estimate);
  return Skill{chain, profile, std::move(result.policy), std::move(ref), result.mse, 0.0};
}

Skill train(const Trajectory& demo, const TrainConfig& cfg) {
  const auto start = Clock::now();
  const auto comps = fit_gmm(demo.points(), cfg.fit);
  const auto ordered = order_components(comps, demo);
  const auto chain = build_chain(ordered, demo);
  ProfileConfig profile = ProfileConfig::from_demo(demo);
  if (cfg.profile_points > 0) profile.points = cfg.profile_points;
  if (cfg.profile_dt > 0.0) profile.dt = cfg.profile_dt;
  Skill skill = learn_on_chain(chain, profile, cfg.adapt);
  skill.fit_seconds = seconds_since(start);
  return skill;
}

Adaptation adapt(const Skill& skill, const GeometricDescriptor& descriptor, const AdaptConfig& cfg) {
  auto t0 = Clock::now();
  ChainTransform moved = transform_chain(skill.chain, descriptor, cfg.scaling);
  const double transform_s = seconds_since(t0);

  t0 = Clock::now();
  Trajectory ref = regenerate_profile(moved.chain.joints, skill.profile);
  const double profile_s = seconds_since(t0);

  // The estimate is a function of the chain alone, and the optimizer's stopping
  // point moves with rounding-level input noise, so an unmoved chain keeps its
  // policy.
  if (unchanged(skill, moved)) {
    Skill out{skill.chain, skill.profile, skill.policy, std::move(ref), skill.mse, 0.0};
    return Adaptation{std::move(out), transform_s, profile_s, 0.0};
  }

  t0 = Clock::now();
  auto result = estimate_detailed(moved.components, ref.points(), *ref.velocities(), moved.chain.joints.back(),
                                  cfg.estimate);
  const double estimate_s = seconds_since(t0);

  Skill out{std::move(moved.chain), skill.profile, std::move(result.policy), std::move(ref), result.mse, 0.0};
  return Adaptation{std::move(out), transform_s, profile_s, estimate_s};
}

TaskPlan plan_sequential(const std::vector<Skill>& skills, const std::vector<GeometricDescriptor>& descriptors,
                         double switch_radius, const AdaptConfig& cfg) {
  if (skills.size() != descriptors.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one descriptor per segment is required");
  }
  std::vector<PlanSegment> segments;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    auto adapted = adapt(skills[i], descriptors[i], cfg);
    segments.push_back(PlanSegment{std::move(adapted.skill.chain), descriptors[i],
                                   std::move(adapted.skill.policy), std::nullopt});
  }
  return TaskPlan(std::move(segments), StitchMode::kSequential, switch_radius);
}

TaskPlan plan_combined(const std::vector<Skill>& skills, const std::vector<GeometricDescriptor>& descriptors,
                       double switch_radius, const AdaptConfig& cfg) {
  if (skills.size() != descriptors.size() || skills.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "one descriptor per segment is required");
  }
  std::vector<ElasticChain> moved;
  int points = 0;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    moved.push_back(transform_chain(skills[i].chain, descriptors[i], cfg.scaling).chain);
    points += skills[i].profile.points - (i > 0 ? 1 : 0);
  }
  ElasticChain stitched = stitch_chains(moved);
  ProfileConfig profile{points, skills.front().profile.dt, skills.front().profile.interpolate_between_joints};
  Skill combined = learn_on_chain(stitched, profile, cfg);
  GeometricDescriptor whole{descriptors.front().enter, descriptors.back().exit};
  std::vector<PlanSegment> segments;
  segments.push_back(PlanSegment{std::move(combined.chain), whole, std::move(combined.policy), std::nullopt});
  return TaskPlan(std::move(segments), StitchMode::kCombined, switch_radius);
}

}  // namespace elastic_ds
