#include "elastic_ds/sequencer.hpp"

#include <limits>
#include <string>

#include "elastic_ds/config.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds {

TaskPlan::TaskPlan(std::vector<PlanSegment> segments, StitchMode mode, double switch_radius)
    : segments_(std::move(segments)), mode_(mode), switch_radius_(switch_radius) {
  if (segments_.empty()) throw Error(ErrorCode::kInvalidArgument, "plan needs at least one segment");
  if (!(switch_radius_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "switch radius must be positive");
  if (mode_ == StitchMode::kCombined && segments_.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "combined plans hold exactly one policy");
  }
  if (mode_ == StitchMode::kSequential) {
    for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
      const auto& next = segments_[i + 1].descriptor;
      const Vec next_start = next.enter ? next.enter->position : segments_[i + 1].chain.joints.front();
      const double gap = (segments_[i].policy.attractor() - next_start).norm();
      if (gap > tolerances().plan_continuity) {
        throw Error(ErrorCode::kInvalidArgument, "segment " + std::to_string(i) +
                                                     " attractor does not meet the next segment start (gap " +
                                                     std::to_string(gap) + ")");
      }
    }
  }
}

PlanExecutor::PlanExecutor(std::shared_ptr<const TaskPlan> plan) : plan_(std::move(plan)) {
  if (!plan_) throw Error(ErrorCode::kInvalidArgument, "null plan");
}

const LpvDsPolicy& PlanExecutor::active_policy() const {
  return plan_->segments()[static_cast<std::size_t>(cursor_)].policy;
}

PlanStep PlanExecutor::step(const Vec& x) {
  const auto& segs = plan_->segments();
  if (plan_->mode() == StitchMode::kSequential) {
    // A state already at the goal skips any remaining segments.
    if ((x - plan_->final_attractor()).norm() < plan_->switch_radius()) {
      cursor_ = static_cast<int>(segs.size()) - 1;
    }
    while (cursor_ + 1 < static_cast<int>(segs.size()) &&
           (x - segs[static_cast<std::size_t>(cursor_)].policy.attractor()).norm() < plan_->switch_radius()) {
      ++cursor_;
    }
  }
  return PlanStep{active_policy().evaluate(x), cursor_};
}

PlanStep step_plan(PlanExecutor& executor, const Vec& x) { return executor.step(x); }

std::vector<Trajectory> split_demo(const Trajectory& traj, const Points& via_points, double radius) {
  if (via_points.empty()) throw Error(ErrorCode::kInvalidArgument, "no via-points given");
  const auto& pts = traj.points();
  std::vector<std::size_t> cuts;
  for (std::size_t v = 0; v < via_points.size(); ++v) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - via_points[v]).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best_d > radius) {
      throw Error(ErrorCode::kViaPointNotOnDemo, "via-point " + std::to_string(v) + " is " +
                                                     std::to_string(best_d) + " from the demonstration");
    }
    if (!cuts.empty() && best <= cuts.back()) {
      throw Error(ErrorCode::kNonMonotoneViaPoints, "via-point " + std::to_string(v) +
                                                        " does not follow the previous one along the demo");
    }
    if (best == 0 || best + 1 >= pts.size()) {
      throw Error(ErrorCode::kViaPointNotOnDemo, "via-point " + std::to_string(v) +
                                                     " coincides with a demonstration endpoint");
    }
    cuts.push_back(best);
  }
  cuts.push_back(pts.size() - 1);

  std::vector<Trajectory> out;
  std::size_t begin = 0;
  for (auto end : cuts) {
    Points p(pts.begin() + static_cast<std::ptrdiff_t>(begin), pts.begin() + static_cast<std::ptrdiff_t>(end + 1));
    std::vector<double> t(traj.timestamps().begin() + static_cast<std::ptrdiff_t>(begin),
                          traj.timestamps().begin() + static_cast<std::ptrdiff_t>(end + 1));
    out.emplace_back(std::move(p), std::move(t));
    begin = end;
  }
  return out;
}

ElasticChain stitch_chains(const std::vector<ElasticChain>& chains) {
  if (chains.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to stitch");
  ElasticChain out;
  const double n_chains = static_cast<double>(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    if (c > 0) {
      const double gap = (out.joints.back() - ch.joints.front()).norm();
      if (gap > tolerances().chain_gap) {
        throw Error(ErrorCode::kChainGapTooLarge, "chains " + std::to_string(c - 1) + " and " +
                                                      std::to_string(c) + " are " + std::to_string(gap) +
                                                      " apart");
      }
    }
    out.joints.insert(out.joints.end(), ch.joints.begin() + (c > 0 ? 1 : 0), ch.joints.end());
    out.links.insert(out.links.end(), ch.links.begin(), ch.links.end());
    out.link_lengths.insert(out.link_lengths.end(), ch.link_lengths.begin(), ch.link_lengths.end());
    for (std::size_t k = 0; k < ch.gmm.size(); ++k) {
      out.gmm.components.push_back(ch.gmm.components[k]);
      out.gmm.order_scores.push_back((static_cast<double>(c) + ch.gmm.order_scores[k]) / n_chains);
    }
  }
  double total = 0.0;
  for (const auto& g : out.gmm.components) total += g.prior;
  for (auto& g : out.gmm.components) g.prior /= total;
  return out;
}

std::vector<GeometricDescriptor> via_descriptors(const Pose& start, const std::vector<Pose>& vias,
                                                 const Pose& end) {
  std::vector<GeometricDescriptor> out;
  Pose enter = start;
  for (const auto& via : vias) {
    out.push_back(GeometricDescriptor{enter, via});
    enter = via;
  }
  out.push_back(GeometricDescriptor{enter, end});
  return out;
}

}  // namespace elastic_ds
