#pragma once

#include <vector>

#include "elastic_ds/core.hpp"
#include "elastic_ds/lpvds.hpp"
#include "elastic_ds/pipeline.hpp"
#include "elastic_ds/sequencer.hpp"

namespace elastic_ds {

enum class Integrator { kEuler, kRk4 };

struct RolloutConfig {
  double dt = 0.01;
  int max_steps = 100000;
  double convergence_radius = 1e-3;
  Integrator integrator = Integrator::kRk4;

  void validate() const;
  // convergence_radius = 1e-3 of the workspace diameter.
  static RolloutConfig for_workspace(double diameter);
};

struct Rollout {
  Trajectory trajectory;               // Velocities hold f at each state.
  bool converged = false;
  std::vector<int> active_segments;    // Per sample; all zero for a bare policy.
};

// Integrates xdot = f(x) from x0 until within convergence_radius of the
// attractor or max_steps. At least one step is always taken.
Rollout rollout(const LpvDsPolicy& policy, const Vec& x0, const RolloutConfig& cfg);
Rollout rollout(PlanExecutor& executor, const Vec& x0, const RolloutConfig& cfg);

// Bounding-box diagonal.
double workspace_diameter(const Points& points);

// Cosine between the first (last) two samples and the enter (exit) x-axis.
double start_cosine(const Trajectory& traj, const GeometricDescriptor& descriptor);
double goal_cosine(const Trajectory& traj, const GeometricDescriptor& descriptor);
double endpoints_distance(const Trajectory& traj, const Pose& o_start, const Pose& o_end);

struct FieldGrid {
  Vec lower;
  Vec upper;
  int nx = 2;
  int ny = 2;
  double slice = 0.0;  // Third coordinate for 3D policies.
};

struct FieldSample {
  Vec point;
  Vec velocity;
};

// Samples the field on a regular grid over axes 0 and 1. Row-major with y as
// the outer index: sample (ix, iy) is at position iy * nx + ix, both axes
// ascending from `lower`.
std::vector<FieldSample> sample_field(const LpvDsPolicy& policy, const FieldGrid& grid);

struct AdaptationReport {
  double start_cos = 0.0;
  double goal_cos = 0.0;
  double endpoints_distance = 0.0;
  bool converged = false;
  double transform_seconds = 0.0;
  double profile_seconds = 0.0;
  double estimate_seconds = 0.0;
  double total_seconds = 0.0;
  double train_seconds = 0.0;
  int num_components = 0;
};

// Metrics of a rollout started at the descriptor's enter position.
AdaptationReport evaluate_adaptation(const LpvDsPolicy& policy, const GeometricDescriptor& descriptor,
                                     const RolloutConfig& cfg);

// Trains on the demo once, then repeats the adaptation; wall times are the
// median over repeats.
AdaptationReport bench_adaptation(const Trajectory& demo, const GeometricDescriptor& descriptor, int repeats,
                                  const TrainConfig& cfg = {});

}  // namespace elastic_ds
