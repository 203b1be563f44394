#include "elastic_ds/elastic_chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseQR>

#include "elastic_ds/config.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds {

namespace {

// Fix each eigenvector's sign so that its first non-negligible coordinate in
// the link frame (x, then y, then z) is nonnegative.
void canonicalize_signs(Mat& vecs) {
  for (int c = 0; c < vecs.cols(); ++c) {
    for (int r = 0; r < vecs.rows(); ++r) {
      if (std::abs(vecs(r, c)) > 1e-12) {
        if (vecs(r, c) < 0.0) vecs.col(c) *= -1.0;
        break;
      }
    }
  }
}

LinkFrame make_link(const GaussianComponent& g, const Pose& frame) {
  LinkFrame link;
  link.mean_local = frame.to_local(g.mean);
  const Mat local_cov = frame.rotation.transpose() * g.covariance * frame.rotation;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (local_cov + local_cov.transpose()));
  link.eigenvalues = eig.eigenvalues();
  link.eigenvectors_local = eig.eigenvectors();
  canonicalize_signs(link.eigenvectors_local);
  link.eigenvectors_local.row(0).cwiseAbs().maxCoeff(&link.along_axis);
  return link;
}

ElasticChain assemble(OrderedGmm gmm, Points joints) {
  ElasticChain chain;
  const std::size_t k = gmm.size();
  chain.links.reserve(k);
  chain.link_lengths.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Pose frame = frame_from_two_points(joints[i], joints[i + 1]);
    chain.links.push_back(make_link(gmm.components[i], frame));
    chain.link_lengths.push_back((joints[i + 1] - joints[i]).norm());
  }
  chain.gmm = std::move(gmm);
  chain.joints = std::move(joints);
  return chain;
}

}  // namespace

Pose ElasticChain::enter_frame() const { return frame_from_two_points(joints[0], joints[1]); }

Pose ElasticChain::exit_frame() const {
  const std::size_t n = joints.size();
  Pose f = frame_from_two_points(joints[n - 2], joints[n - 1]);
  f.position = joints[n - 1];
  return f;
}

GeometricDescriptor ElasticChain::endpoint_descriptor() const {
  return GeometricDescriptor{enter_frame(), exit_frame()};
}

void LaplacianSystem::attach(const Points& points) {
  if (static_cast<int>(points.size()) != size()) {
    throw Error(ErrorCode::kInvalidArgument, "point count does not match Laplacian size");
  }
  const int d = static_cast<int>(points.front().size());
  Eigen::MatrixXd p(points.size(), d);
  for (std::size_t i = 0; i < points.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  delta = laplacian * p;
}

Vec gaussian_joint(const GaussianComponent& a, const GaussianComponent& b) {
  Eigen::LLT<Mat> la(a.covariance);
  Eigen::LLT<Mat> lb(b.covariance);
  if (la.info() != Eigen::Success || lb.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance, "joint of a non positive-definite covariance");
  }
  const int d = a.dim();
  const Mat prec_a = la.solve(Mat::Identity(d, d));
  const Mat prec_b = lb.solve(Mat::Identity(d, d));
  Eigen::LLT<Mat> lt(prec_a + prec_b);
  if (lt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance, "product precision is not positive definite");
  }
  return lt.solve(prec_a * a.mean + prec_b * b.mean);
}

ElasticChain build_chain(const OrderedGmm& gmm, const Vec& start, const Vec& end) {
  if (gmm.size() == 0) throw Error(ErrorCode::kInvalidArgument, "chain needs at least one component");
  Points joints;
  joints.reserve(gmm.size() + 1);
  joints.push_back(start);
  for (std::size_t i = 0; i + 1 < gmm.size(); ++i) {
    joints.push_back(gaussian_joint(gmm.components[i], gmm.components[i + 1]));
  }
  joints.push_back(end);
  return assemble(gmm, std::move(joints));
}

ElasticChain build_chain(const OrderedGmm& gmm, const Trajectory& demo) {
  return build_chain(gmm, demo.front(), demo.back());
}

LaplacianSystem build_laplacian(int m) {
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "Laplacian needs at least 2 points");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * m));
  for (int i = 0; i < m; ++i) {
    t.emplace_back(i, i, 1.0);
    if (i == 0) {
      t.emplace_back(i, 1, -1.0);
    } else if (i == m - 1) {
      t.emplace_back(i, m - 2, -1.0);
    } else {
      t.emplace_back(i, i - 1, -0.5);
      t.emplace_back(i, i + 1, -0.5);
    }
  }
  LaplacianSystem sys;
  sys.laplacian.resize(m, m);
  sys.laplacian.setFromTriplets(t.begin(), t.end());
  sys.laplacian.makeCompressed();
  return sys;
}

Points solve_pinned(const LaplacianSystem& sys, const std::vector<Pin>& pins) {
  const int m = sys.size();
  if (sys.delta.rows() != m) throw Error(ErrorCode::kInvalidArgument, "Laplacian coordinates not attached");
  if (pins.empty()) {
    throw Error(ErrorCode::kRankDeficientSystem, "Laplacian edit without pins is underdetermined");
  }
  const int d = static_cast<int>(sys.delta.cols());
  const double tol = tolerances().constraint;

  std::map<int, Vec> pinned;
  for (const auto& pin : pins) {
    if (pin.index < 0 || pin.index >= m) throw Error(ErrorCode::kInvalidArgument, "pin index out of range");
    if (pin.target.size() != d) throw Error(ErrorCode::kInvalidArgument, "pin dimension mismatch");
    auto [it, inserted] = pinned.emplace(pin.index, pin.target);
    if (!inserted) {
      const double gap = (it->second - pin.target).norm();
      if (gap > tol) {
        throw Error(ErrorCode::kRankDeficientSystem,
                    "point " + std::to_string(pin.index) + " pinned to two targets (residual " +
                        std::to_string(gap) + ")");
      }
    }
  }

  std::vector<int> free_index(static_cast<std::size_t>(m), -1);
  int n_free = 0;
  for (int i = 0; i < m; ++i) {
    if (!pinned.count(i)) free_index[static_cast<std::size_t>(i)] = n_free++;
  }

  Eigen::MatrixXd rhs = sys.delta;
  std::vector<Eigen::Triplet<double>> t;
  for (int col = 0; col < m; ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.laplacian, col); it; ++it) {
      const auto row = static_cast<int>(it.row());
      const int f = free_index[static_cast<std::size_t>(col)];
      if (f >= 0) {
        t.emplace_back(row, f, it.value());
      } else {
        rhs.row(row) -= it.value() * pinned.at(col).transpose();
      }
    }
  }

  Eigen::MatrixXd solution(m, d);
  for (const auto& [i, target] : pinned) solution.row(i) = target.transpose();
  if (n_free > 0) {
    Eigen::SparseMatrix<double> a(m, n_free);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
    qr.compute(a);
    if (qr.info() != Eigen::Success || qr.rank() < n_free) {
      throw Error(ErrorCode::kRankDeficientSystem, "constrained Laplacian system is rank deficient");
    }
    const Eigen::MatrixXd x = qr.solve(rhs);
    if (qr.info() != Eigen::Success || !x.allFinite()) {
      throw Error(ErrorCode::kRankDeficientSystem, "constrained Laplacian solve failed");
    }
    for (int i = 0; i < m; ++i) {
      const int f = free_index[static_cast<std::size_t>(i)];
      if (f >= 0) solution.row(i) = x.row(f);
    }
  }

  Points out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = solution.row(i).transpose();
  return out;
}

Points solve_constrained_edit(const LaplacianSystem& sys, const Points& joints0,
                              const std::optional<Pose>& o_start, const std::optional<Pose>& o_end) {
  if (!o_start && !o_end) throw Error(ErrorCode::kInvalidArgument, "edit needs at least one descriptor");
  const int m = static_cast<int>(joints0.size());
  if (m != sys.size() || m < 2) throw Error(ErrorCode::kInvalidArgument, "joints do not match the system");
  const int d = static_cast<int>(joints0.front().size());
  if (o_start) o_start->validate(tolerances().orthonormality);
  if (o_end) o_end->validate(tolerances().orthonormality);
  if ((o_start && o_start->dim() != d) || (o_end && o_end->dim() != d)) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor dimension does not match chain");
  }

  LaplacianSystem edit = sys;
  if (edit.delta.rows() != m) edit.attach(joints0);

  std::vector<Pin> pins;
  if (o_start) {
    const double first = (joints0[1] - joints0[0]).norm();
    pins.push_back({0, o_start->position});
    pins.push_back({1, Vec(o_start->position + first * o_start->x_axis())});
  }
  if (o_end) {
    const double last = (joints0[static_cast<std::size_t>(m - 1)] - joints0[static_cast<std::size_t>(m - 2)]).norm();
    pins.push_back({m - 1, o_end->position});
    pins.push_back({m - 2, Vec(o_end->position - last * o_end->x_axis())});
  }
  return solve_pinned(edit, pins);
}

Components recover_gmm(const ElasticChain& chain, const Points& new_joints, EigenvalueScaling scaling) {
  if (new_joints.size() != chain.joints.size()) {
    throw Error(ErrorCode::kInvalidArgument, "joint count does not match the chain");
  }
  Components out;
  out.reserve(chain.num_components());
  for (std::size_t k = 0; k < chain.num_components(); ++k) {
    const Pose frame = frame_from_two_points(new_joints[k], new_joints[k + 1]);
    const double ratio = (new_joints[k + 1] - new_joints[k]).norm() / chain.link_lengths[k];
    const LinkFrame& link = chain.links[k];

    Vec mean_local = link.mean_local;
    mean_local(0) *= ratio;
    Vec eigenvalues = link.eigenvalues;
    eigenvalues(link.along_axis) *= scaling == EigenvalueScaling::kSquared ? ratio * ratio : ratio;

    const Mat basis = frame.rotation * link.eigenvectors_local;
    Mat cov = basis * eigenvalues.asDiagonal() * basis.transpose();

    GaussianComponent g;
    g.prior = chain.gmm.components[k].prior;
    g.mean = frame.to_world(mean_local);
    g.covariance = 0.5 * (cov + cov.transpose());
    out.push_back(std::move(g));
  }
  return out;
}

ChainTransform transform_chain(const ElasticChain& chain, const GeometricDescriptor& descriptor,
                               EigenvalueScaling scaling) {
  descriptor.validate(tolerances().orthonormality);
  LaplacianSystem sys = build_laplacian(static_cast<int>(chain.joints.size()));
  sys.attach(chain.joints);
  Points joints = solve_constrained_edit(sys, chain.joints, descriptor.enter, descriptor.exit);
  Components comps = recover_gmm(chain, joints, scaling);
  OrderedGmm gmm{comps, chain.gmm.order_scores};
  return ChainTransform{assemble(std::move(gmm), std::move(joints)), std::move(comps)};
}

}  // namespace elastic_ds
