#pragma once

#include <optional>
#include <vector>

#include "elastic_ds/types.hpp"

namespace elastic_ds {

// Rigid frame: rotation columns are the frame axes expressed in the world.
struct Pose {
  Vec position;
  Mat rotation;

  static Pose identity(int dim);

  int dim() const { return static_cast<int>(position.size()); }
  Vec x_axis() const { return rotation.col(0); }

  Pose compose(const Pose& other) const;
  Pose inverse() const;
  Vec to_world(const Vec& local) const { return rotation * local + position; }
  Vec to_local(const Vec& world) const { return rotation.transpose() * (world - position); }

  // Throws kInvalidArgument unless the rotation is orthonormal with det +1.
  void validate(double tol) const;
};

class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Points points, std::vector<double> timestamps,
             std::optional<Points> velocities = std::nullopt);

  // Uniformly timed trajectory t_i = i * dt.
  static Trajectory uniform(Points points, double dt);

  const Points& points() const { return points_; }
  const std::vector<double>& timestamps() const { return timestamps_; }
  const std::optional<Points>& velocities() const { return velocities_; }

  std::size_t size() const { return points_.size(); }
  int dim() const { return points_.empty() ? 0 : static_cast<int>(points_.front().size()); }
  const Vec& front() const { return points_.front(); }
  const Vec& back() const { return points_.back(); }

  double arc_length() const;
  // Normalized cumulative arc length per point, in [0, 1].
  std::vector<double> arc_parameter() const;
  double median_dt() const;

  Trajectory reversed() const;

 private:
  Points points_;
  std::vector<double> timestamps_;
  std::optional<Points> velocities_;
};

struct GeometricDescriptor {
  std::optional<Pose> enter;
  std::optional<Pose> exit;

  void validate(double tol) const;
};

struct GaussianComponent {
  double prior = 1.0;
  Vec mean;
  Mat covariance;

  int dim() const { return static_cast<int>(mean.size()); }
  void validate(double tol) const;
};

using Components = std::vector<GaussianComponent>;

// Frame at `origin` whose x-axis points toward `toward`. The remaining axes
// are completed deterministically: in 2D y is x rotated 90 degrees CCW; in 3D
// y = normalize(x cross z_world) (y_world is used as the auxiliary axis when x
// is within acos(0.99) of z_world) and z = x cross y.
Pose frame_from_two_points(const Vec& origin, const Vec& toward);

// Forward differences with a zero terminal velocity.
Trajectory compute_velocities(const Trajectory& traj);

bool all_finite(const Vec& v);

}  // namespace elastic_ds
