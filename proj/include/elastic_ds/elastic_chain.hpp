#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "elastic_ds/core.hpp"
#include "elastic_ds/gmm.hpp"

namespace elastic_ds {

// How the covariance eigenvalue along a link reacts to a change of link length
// by ratio r: multiplied by r^2 (shape preserving) or by r.
enum class EigenvalueScaling { kSquared, kLinear };

// A component's mean and covariance eigenbasis expressed in the frame of the
// joint that precedes it, x-axis toward the following joint.
struct LinkFrame {
  Vec mean_local;
  Mat eigenvectors_local;  // Columns, sign-canonicalized.
  Vec eigenvalues;
  int along_axis = 0;      // Column of eigenvectors_local closest to the link x-axis.
};

struct ElasticChain {
  OrderedGmm gmm;
  Points joints;  // K + 1 joints.
  std::vector<LinkFrame> links;
  std::vector<double> link_lengths;

  std::size_t num_components() const { return gmm.size(); }
  int dim() const { return static_cast<int>(joints.front().size()); }

  // Frames spanned by the first and last links: the enter frame sits at the
  // first joint, the exit frame at the last joint, both with x-axis along the
  // direction of travel.
  Pose enter_frame() const;
  Pose exit_frame() const;
  GeometricDescriptor endpoint_descriptor() const;
};

struct Pin {
  int index = 0;
  Vec target;
};

// Path-graph Laplacian with unit weights, plus the Laplacian coordinates of
// the path it was built from.
struct LaplacianSystem {
  Eigen::SparseMatrix<double> laplacian;
  Eigen::MatrixXd delta;  // m x d, empty until points are attached.
  std::vector<Pin> pins;

  int size() const { return static_cast<int>(laplacian.rows()); }
  void attach(const Points& points);
};

// Mean of the product of two Gaussians.
Vec gaussian_joint(const GaussianComponent& a, const GaussianComponent& b);

ElasticChain build_chain(const OrderedGmm& gmm, const Vec& start, const Vec& end);
ElasticChain build_chain(const OrderedGmm& gmm, const Trajectory& demo);

LaplacianSystem build_laplacian(int m);

// min ||L x - delta||^2 subject to the pins, solved per coordinate by
// eliminating the pinned unknowns. Duplicate pins must agree.
Points solve_pinned(const LaplacianSystem& sys, const std::vector<Pin>& pins);

// Pins the first link to o_start and/or the last link to o_end, keeping the
// original first/last link lengths, then solves the Laplacian edit.
Points solve_constrained_edit(const LaplacianSystem& sys, const Points& joints0,
                              const std::optional<Pose>& o_start, const std::optional<Pose>& o_end);

Components recover_gmm(const ElasticChain& chain, const Points& new_joints,
                       EigenvalueScaling scaling = EigenvalueScaling::kSquared);

struct ChainTransform {
  ElasticChain chain;
  Components components;
};

ChainTransform transform_chain(const ElasticChain& chain, const GeometricDescriptor& descriptor,
                               EigenvalueScaling scaling = EigenvalueScaling::kSquared);

}  // namespace elastic_ds
