#pragma once

#include <string>
#include <vector>

#include "elastic_ds/core.hpp"

namespace elastic_ds::synthetic {

// Scripted single demonstrations sampled with a minimum-jerk timing law, so
// every demo starts and ends at rest. Units: meters and seconds.
Trajectory s_curve(int n = 200, double duration = 2.0);
Trajectory c_curve(int n = 200, double duration = 2.0);
Trajectory l_shape(int n = 200, double duration = 2.0);
Trajectory wave(int n = 200, double duration = 2.0);
Trajectory helix(int n = 200, double duration = 2.0);  // 3D

std::vector<std::string> shape_names();
Trajectory by_name(const std::string& name, int n = 200, double duration = 2.0);

// Pose with the given position and a planar heading (radians, about z).
Pose planar_pose(const Vec& position, double heading);

// Start/end frames of the demo rotated and shifted in the xy-plane.
GeometricDescriptor shifted_descriptor(const Trajectory& demo, const Vec& start_shift, double start_turn,
                                       const Vec& end_shift, double end_turn);

// Both endpoints moved and re-oriented, scaled to the demo's workspace.
GeometricDescriptor both_ends_shifted(const Trajectory& demo);

}  // namespace elastic_ds::synthetic
