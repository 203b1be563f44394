#pragma once

#include <vector>

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/gmm.hpp"
#include "elastic_ds/lpvds.hpp"
#include "elastic_ds/sequencer.hpp"
#include "elastic_ds/velocity_profile.hpp"

namespace elastic_ds {

struct AdaptConfig {
  EstimateOptions estimate;
  EigenvalueScaling scaling = EigenvalueScaling::kSquared;
};

struct TrainConfig {
  GmmFitConfig fit = default_fit();
  AdaptConfig adapt;
  // Overrides the demo-derived profile length / sampling interval.
  int profile_points = 0;
  double profile_dt = 0.0;

  // Independent entry and exit link pins need at least four joints, so the
  // pipeline fits three or more components by default.
  static GmmFitConfig default_fit() {
    GmmFitConfig cfg;
    cfg.k_min = 3;
    return cfg;
  }
};

// A policy together with the chain and profile settings it was derived from.
struct Skill {
  ElasticChain chain;
  ProfileConfig profile;
  LpvDsPolicy policy;
  Trajectory reference;  // Profile the policy was estimated on.
  double mse = 0.0;
  double fit_seconds = 0.0;
};

struct Adaptation {
  Skill skill;
  double transform_seconds = 0.0;
  double profile_seconds = 0.0;
  double estimate_seconds = 0.0;
  double total_seconds() const { return transform_seconds + profile_seconds + estimate_seconds; }
};

// Fit and order the GMM, build the chain, then estimate the policy on the
// profile regenerated through the untransformed joints.
Skill train(const Trajectory& demo, const TrainConfig& cfg = {});

// Estimate a policy on the profile regenerated through the chain's joints.
Skill learn_on_chain(const ElasticChain& chain, const ProfileConfig& profile, const AdaptConfig& cfg);

// Transform the chain to the descriptor, regenerate the profile and
// re-estimate the policy.
Adaptation adapt(const Skill& skill, const GeometricDescriptor& descriptor, const AdaptConfig& cfg = {});

TaskPlan plan_sequential(const std::vector<Skill>& skills, const std::vector<GeometricDescriptor>& descriptors,
                         double switch_radius, const AdaptConfig& cfg = {});

// One policy over the stitched transformed chains.
TaskPlan plan_combined(const std::vector<Skill>& skills, const std::vector<GeometricDescriptor>& descriptors,
                       double switch_radius, const AdaptConfig& cfg = {});

}  // namespace elastic_ds
