#pragma once

namespace elastic_ds {

// Numerical tolerances shared across modules.
struct Tolerances {
  double orthonormality = 1e-9;      // Pose rotation checks.
  double frame_degeneracy = 1e-9;    // Minimum separation for frame_from_two_points.
  double symmetry = 1e-9;            // Covariance symmetry.
  double constraint = 1e-9;          // Pinned-point exactness in constrained edits.
  double chain_gap = 1e-6;           // Shared endpoint tolerance when stitching.
  double plan_continuity = 1e-6;     // Attractor/next-start agreement in sequential plans.
  double descriptor_rotation = 1e-6; // Orthonormality check on loaded descriptor files.
  double em_slack = 1e-8;            // Allowed relative log-likelihood drop per EM step.
};

inline const Tolerances& tolerances() {
  static const Tolerances kDefaults{};
  return kDefaults;
}

}  // namespace elastic_ds
