#include "elastic_ds/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "elastic_ds/config.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kNonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kEmDidNotImprove: return "EmDidNotImprove";
    case ErrorCode::kSingularCovariance: return "SingularCovariance";
    case ErrorCode::kRankDeficientSystem: return "RankDeficientSystem";
    case ErrorCode::kZeroLengthChain: return "ZeroLengthChain";
    case ErrorCode::kIndexCollision: return "IndexCollision";
    case ErrorCode::kOptimizationDiverged: return "OptimizationDiverged";
    case ErrorCode::kInfeasibleAttractor: return "InfeasibleAttractor";
    case ErrorCode::kViaPointNotOnDemo: return "ViaPointNotOnDemo";
    case ErrorCode::kNonMonotoneViaPoints: return "NonMonotoneViaPoints";
    case ErrorCode::kChainGapTooLarge: return "ChainGapTooLarge";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kDegenerateDirection: return "DegenerateDirection";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

bool all_finite(const Vec& v) { return v.allFinite(); }

namespace {

void check_dim(int d) {
  if (d != 2 && d != 3) {
    throw Error(ErrorCode::kInvalidArgument, "dimension must be 2 or 3, got " + std::to_string(d));
  }
}

}  // namespace

Pose Pose::identity(int dim) {
  check_dim(dim);
  return Pose{Vec::Zero(dim), Mat::Identity(dim, dim)};
}

Pose Pose::compose(const Pose& other) const {
  return Pose{rotation * other.position + position, rotation * other.rotation};
}

Pose Pose::inverse() const {
  Mat rt = rotation.transpose();
  return Pose{-(rt * position), rt};
}

void Pose::validate(double tol) const {
  const int d = dim();
  check_dim(d);
  if (rotation.rows() != d || rotation.cols() != d) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation shape does not match position");
  }
  if (!position.allFinite() || !rotation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose has non-finite entries");
  }
  const double ortho = (rotation.transpose() * rotation - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (ortho > tol) {
    throw Error(ErrorCode::kInvalidArgument,
                "pose rotation is not orthonormal (deviation " + std::to_string(ortho) + ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > tol) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation determinant is not +1");
  }
}

Trajectory::Trajectory(Points points, std::vector<double> timestamps,
                       std::optional<Points> velocities)
    : points_(std::move(points)),
      timestamps_(std::move(timestamps)),
      velocities_(std::move(velocities)) {
  if (points_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory needs at least 2 points");
  }
  if (timestamps_.size() != points_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "timestamp count does not match point count");
  }
  const int d = static_cast<int>(points_.front().size());
  check_dim(d);
  for (const auto& p : points_) {
    if (p.size() != d) throw Error(ErrorCode::kInvalidArgument, "mixed point dimensions");
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite trajectory point");
  }
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    if (!(timestamps_[i] > timestamps_[i - 1])) {
      throw Error(ErrorCode::kNonMonotoneTimestamps,
                  "timestamps must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }
  if (velocities_ && velocities_->size() != points_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "velocity count does not match point count");
  }
}

Trajectory Trajectory::uniform(Points points, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  std::vector<double> t(points.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * dt;
  return Trajectory(std::move(points), std::move(t));
}

double Trajectory::arc_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) len += (points_[i] - points_[i - 1]).norm();
  return len;
}

std::vector<double> Trajectory::arc_parameter() const {
  std::vector<double> s(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    s[i] = s[i - 1] + (points_[i] - points_[i - 1]).norm();
  }
  const double total = s.back();
  if (total <= 0.0) {
    // Stationary demonstration: fall back to the index parameter.
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = static_cast<double>(i) / static_cast<double>(s.size() - 1);
    }
    return s;
  }
  for (auto& v : s) v /= total;
  s.back() = 1.0;
  return s;
}

double Trajectory::median_dt() const {
  std::vector<double> dts(timestamps_.size() - 1);
  for (std::size_t i = 0; i + 1 < timestamps_.size(); ++i) dts[i] = timestamps_[i + 1] - timestamps_[i];
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  if (dts.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(dts.begin(), mid);
  return 0.5 * (lower + upper);
}

Trajectory Trajectory::reversed() const {
  Points pts(points_.rbegin(), points_.rend());
  std::vector<double> t(timestamps_.size());
  const double end = timestamps_.back();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = end - timestamps_[timestamps_.size() - 1 - i];
  return Trajectory(std::move(pts), std::move(t));
}

void GeometricDescriptor::validate(double tol) const {
  if (!enter && !exit) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor needs an enter or an exit pose");
  }
  if (enter) enter->validate(tol);
  if (exit) exit->validate(tol);
  if (enter && exit && enter->dim() != exit->dim()) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor poses have different dimensions");
  }
}

void GaussianComponent::validate(double tol) const {
  const int d = dim();
  check_dim(d);
  if (covariance.rows() != d || covariance.cols() != d) {
    throw Error(ErrorCode::kInvalidArgument, "covariance shape does not match mean");
  }
  if (!(prior > 0.0 && prior <= 1.0 + tol)) {
    throw Error(ErrorCode::kInvalidArgument, "component prior outside (0, 1]");
  }
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "component has non-finite entries");
  }
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::kInvalidArgument, "covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(covariance, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorCode::kSingularCovariance, "covariance is not positive definite");
  }
}

Pose frame_from_two_points(const Vec& origin, const Vec& toward) {
  const int d = static_cast<int>(origin.size());
  check_dim(d);
  if (toward.size() != d) throw Error(ErrorCode::kInvalidArgument, "frame points differ in dimension");
  const Vec diff = toward - origin;
  const double len = diff.norm();
  if (!(len > tolerances().frame_degeneracy)) {
    throw Error(ErrorCode::kDegenerateFrame, "frame points coincide");
  }
  const Vec x = diff / len;
  Mat r(d, d);
  r.col(0) = x;
  if (d == 2) {
    r(0, 1) = -x(1);
    r(1, 1) = x(0);
  } else {
    const Eigen::Vector3d x3 = x;
    Eigen::Vector3d aux = Eigen::Vector3d::UnitZ();
    if (std::abs(x3.dot(aux)) > 0.99) aux = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d y3 = x3.cross(aux).normalized();
    const Eigen::Vector3d z3 = x3.cross(y3);
    r.col(1) = y3;
    r.col(2) = z3;
  }
  return Pose{origin, r};
}

Trajectory compute_velocities(const Trajectory& traj) {
  const auto& p = traj.points();
  const auto& t = traj.timestamps();
  const int d = traj.dim();
  Points v(p.size(), Vec::Zero(d));
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    if (!(dt > 0.0)) throw Error(ErrorCode::kNonMonotoneTimestamps, "non-increasing timestamps");
    v[i] = (p[i + 1] - p[i]) / dt;
  }
  return Trajectory(p, t, std::move(v));
}

}  // namespace elastic_ds
