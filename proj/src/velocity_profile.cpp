#include "elastic_ds/velocity_profile.hpp"

#include <cmath>
#include <string>

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds {

ProfileConfig ProfileConfig::from_demo(const Trajectory& demo) {
  return ProfileConfig{static_cast<int>(demo.size()), demo.median_dt(), true};
}

std::vector<double> joint_progress(const Points& joints) {
  if (joints.size() < 2) throw Error(ErrorCode::kInvalidArgument, "progress needs at least 2 joints");
  std::vector<double> cumulative(joints.size(), 0.0);
  for (std::size_t i = 1; i < joints.size(); ++i) {
    const double seg = (joints[i] - joints[i - 1]).norm();
    if (!(seg > 0.0)) {
      throw Error(ErrorCode::kZeroLengthChain, "joints " + std::to_string(i - 1) + " and " +
                                                   std::to_string(i) + " coincide");
    }
    cumulative[i] = cumulative[i - 1] + seg;
  }
  const double total = cumulative.back();
  for (auto& c : cumulative) c /= total;
  cumulative.back() = 1.0;
  return cumulative;
}

std::vector<int> map_joint_indices(const std::vector<double>& progress, int p) {
  if (p < 2) throw Error(ErrorCode::kInvalidArgument, "profile needs at least 2 points");
  std::vector<int> idx(progress.size());
  for (std::size_t q = 0; q < progress.size(); ++q) {
    idx[q] = static_cast<int>(std::floor(progress[q] * static_cast<double>(p - 1)));
    if (q > 0 && idx[q] <= idx[q - 1]) {
      throw Error(ErrorCode::kIndexCollision, "joints " + std::to_string(q - 1) + " and " +
                                                  std::to_string(q) + " map to index " +
                                                  std::to_string(idx[q]) + "; increase p");
    }
  }
  return idx;
}

Trajectory regenerate_profile(const Points& joints, const ProfileConfig& cfg) {
  if (cfg.points < static_cast<int>(joints.size())) {
    throw Error(ErrorCode::kInvalidArgument, "profile must have at least as many points as joints");
  }
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "profile dt must be positive");
  const int p = cfg.points;
  const auto idx = map_joint_indices(joint_progress(joints), p);

  Points line(static_cast<std::size_t>(p));
  const Vec& a = joints.front();
  const Vec& b = joints.back();
  for (int i = 0; i < p; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(p - 1);
    line[static_cast<std::size_t>(i)] = (1.0 - s) * a + s * b;
  }

  LaplacianSystem sys = build_laplacian(p);
  sys.attach(line);
  std::vector<Pin> pins;
  for (std::size_t q = 0; q < joints.size(); ++q) pins.push_back({idx[q], joints[q]});
  if (cfg.interpolate_between_joints) {
    for (std::size_t q = 0; q + 1 < joints.size(); ++q) {
      const int lo = idx[q];
      const int hi = idx[q + 1];
      for (int i = lo + 1; i < hi; ++i) {
        const double s = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
        pins.push_back({i, Vec((1.0 - s) * joints[q] + s * joints[q + 1])});
      }
    }
  }
  Points edited = solve_pinned(sys, pins);
  return compute_velocities(Trajectory::uniform(std::move(edited), cfg.dt));
}

}  // namespace elastic_ds
