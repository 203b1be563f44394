#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elastic_ds/core.hpp"
#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/lpvds.hpp"

namespace elastic_ds {

enum class StitchMode { kSequential, kCombined };

struct PlanSegment {
  ElasticChain chain;
  GeometricDescriptor descriptor;
  LpvDsPolicy policy;
  std::optional<std::string> action;  // Pass-through annotation, e.g. "gripper:close".
};

// Ordered segments with a one-hot activation rule. In sequential mode segment
// i hands over to segment i+1 once the state is within switch_radius of its
// attractor; in combined mode there is exactly one segment.
class TaskPlan {
 public:
  TaskPlan(std::vector<PlanSegment> segments, StitchMode mode, double switch_radius);

  const std::vector<PlanSegment>& segments() const { return segments_; }
  StitchMode mode() const { return mode_; }
  double switch_radius() const { return switch_radius_; }
  const Vec& final_attractor() const { return segments_.back().policy.attractor(); }

 private:
  std::vector<PlanSegment> segments_;
  StitchMode mode_;
  double switch_radius_;
};

struct PlanStep {
  Vec velocity;
  int active_segment = 0;
};

// Owns the activation cursor for one execution of a plan. Copies share the
// plan and carry their own cursor.
class PlanExecutor {
 public:
  explicit PlanExecutor(std::shared_ptr<const TaskPlan> plan);

  PlanStep step(const Vec& x);
  int cursor() const { return cursor_; }
  const TaskPlan& plan() const { return *plan_; }
  const LpvDsPolicy& active_policy() const;
  void reset() { cursor_ = 0; }

 private:
  std::shared_ptr<const TaskPlan> plan_;
  int cursor_ = 0;
};

PlanStep step_plan(PlanExecutor& executor, const Vec& x);

// Splits at the closest-approach index of each via-point. Neighbouring
// segments share their boundary sample.
std::vector<Trajectory> split_demo(const Trajectory& traj, const Points& via_points, double radius);

// Concatenates chains whose boundary joints coincide, renormalizing priors.
ElasticChain stitch_chains(const std::vector<ElasticChain>& chains);

// Descriptors for a demonstration split at interior via-poses: segment i exits
// through the pose that segment i+1 enters from.
std::vector<GeometricDescriptor> via_descriptors(const Pose& start, const std::vector<Pose>& vias,
                                                 const Pose& end);

}  // namespace elastic_ds
