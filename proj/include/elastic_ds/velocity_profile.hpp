#pragma once

#include <vector>

#include "elastic_ds/core.hpp"

namespace elastic_ds {

struct ProfileConfig {
  int points = 0;      // p; must be >= number of joints.
  double dt = 0.0;     // Seconds between consecutive profile samples.
  bool interpolate_between_joints = true;

  // p = demo length, dt = median demo sampling interval.
  static ProfileConfig from_demo(const Trajectory& demo);
};

// Cumulative piecewise distance to each joint, normalized by the total.
std::vector<double> joint_progress(const Points& joints);

// j_q = floor(lambda_q * (p - 1)).
std::vector<int> map_joint_indices(const std::vector<double>& progress, int p);

// Straight line from the first to the last joint, edited with the Laplacian so
// it passes through every joint at its progress index. When
// interpolate_between_joints is set, every index between consecutive joint
// indices is also pinned to the linear interpolant of the two joints, which
// keeps the profile on the links near the descriptors.
Trajectory regenerate_profile(const Points& joints, const ProfileConfig& cfg);

}  // namespace elastic_ds
