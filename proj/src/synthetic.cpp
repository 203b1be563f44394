#include "elastic_ds/synthetic.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Geometry>

#include "elastic_ds/errors.hpp"

namespace elastic_ds::synthetic {

namespace {

using Path = std::function<Vec(double)>;

double min_jerk(double tau) { return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau); }

Trajectory sample(const Path& path, int n, double duration) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "demo needs at least 2 samples");
  Points pts;
  std::vector<double> t;
  for (int i = 0; i < n; ++i) {
    const double tau = static_cast<double>(i) / (n - 1);
    pts.push_back(path(min_jerk(tau)));
    t.push_back(tau * duration);
  }
  return Trajectory(std::move(pts), std::move(t));
}

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Frame whose x-axis is the direction from a to b.
Pose heading_frame(const Vec& at, const Vec& a, const Vec& b) {
  Pose f = frame_from_two_points(a, b);
  f.position = at;
  return f;
}

Pose turned(const Pose& pose, const Vec& shift, double turn) {
  const int d = pose.dim();
  Mat rz = Mat::Identity(d, d);
  rz(0, 0) = std::cos(turn);
  rz(0, 1) = -std::sin(turn);
  rz(1, 0) = std::sin(turn);
  rz(1, 1) = std::cos(turn);
  Vec s = Vec::Zero(d);
  s.head(shift.size()) = shift;
  return Pose{pose.position + s, rz * pose.rotation};
}

}  // namespace

Trajectory s_curve(int n, double duration) {
  constexpr double kPi = std::numbers::pi;
  return sample([](double s) { return v2(s, 0.2 * std::sin(2.0 * kPi * s)); }, n, duration);
}

Trajectory c_curve(int n, double duration) {
  constexpr double kPi = std::numbers::pi;
  return sample([](double s) { return v2(0.5 * std::cos(kPi * (1.0 - s)) + 0.5, 0.4 * std::sin(kPi * s)); }, n,
                duration);
}

Trajectory l_shape(int n, double duration) {
  // Straight legs joined by a quarter circle of radius 0.2.
  return sample(
      [](double s) {
        constexpr double kPi = std::numbers::pi;
        const double r = 0.2;
        const double leg = 0.6;
        const double arc = 0.5 * kPi * r;
        const double total = 2.0 * leg + arc;
        const double u = s * total;
        if (u <= leg) return v2(0.0, 0.8 - u);
        if (u <= leg + arc) {
          const double a = (u - leg) / r;  // 0 .. pi/2
          return v2(r - r * std::cos(a), 0.2 - r * std::sin(a));
        }
        return v2(r + (u - leg - arc), 0.0);
      },
      n, duration);
}

Trajectory wave(int n, double duration) {
  constexpr double kPi = std::numbers::pi;
  return sample([](double s) { return v2(1.2 * s, 0.15 * std::sin(4.0 * kPi * s) + 0.3 * s); }, n, duration);
}

Trajectory helix(int n, double duration) {
  constexpr double kPi = std::numbers::pi;
  return sample(
      [](double s) {
        Vec v(3);
        v << 0.3 * std::cos(1.5 * kPi * s), 0.3 * std::sin(1.5 * kPi * s), 0.4 * s;
        return v;
      },
      n, duration);
}

std::vector<std::string> shape_names() { return {"s-curve", "c-curve", "l-shape", "wave", "helix"}; }

Trajectory by_name(const std::string& name, int n, double duration) {
  if (name == "s-curve") return s_curve(n, duration);
  if (name == "c-curve") return c_curve(n, duration);
  if (name == "l-shape") return l_shape(n, duration);
  if (name == "wave") return wave(n, duration);
  if (name == "helix") return helix(n, duration);
  throw Error(ErrorCode::kInvalidArgument, "unknown demo shape '" + name + "'");
}

Pose planar_pose(const Vec& position, double heading) {
  const int d = static_cast<int>(position.size());
  Pose p = Pose::identity(d);
  p.position = position;
  return turned(p, Vec::Zero(2), heading);
}

GeometricDescriptor shifted_descriptor(const Trajectory& demo, const Vec& start_shift, double start_turn,
                                       const Vec& end_shift, double end_turn) {
  const auto& p = demo.points();
  // Directions from a few samples in, the first samples move very little.
  const std::size_t lead = std::min<std::size_t>(p.size() - 1, std::max<std::size_t>(1, p.size() / 20));
  const Pose enter = heading_frame(p.front(), p.front(), p[lead]);
  const Pose exit = heading_frame(p.back(), p[p.size() - 1 - lead], p.back());
  return GeometricDescriptor{turned(enter, start_shift, start_turn), turned(exit, end_shift, end_turn)};
}

GeometricDescriptor both_ends_shifted(const Trajectory& demo) {
  Vec lo = demo.front();
  Vec hi = demo.front();
  for (const auto& q : demo.points()) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const double scale = (hi - lo).norm();
  return shifted_descriptor(demo, v2(-0.1 * scale, 0.15 * scale), 0.35, v2(0.1 * scale, -0.2 * scale), -0.5);
}

}  // namespace elastic_ds::synthetic
