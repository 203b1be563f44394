#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/errors.hpp"
#include "elastic_ds/synthetic.hpp"
#include "oracles.hpp"

using namespace elastic_ds;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

double max_diff(const Points& a, const Points& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

ElasticChain s_curve_chain(int k = 6) {
  const auto demo = synthetic::s_curve();
  GmmFitConfig cfg;
  cfg.k_min = k;
  cfg.k_max = k;
  cfg.seed = 4;
  return build_chain(order_components(fit_gmm(demo.points(), cfg), demo), demo);
}

// Random chain with m joints wandering roughly along +x.
Points random_joints(int m, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> step(0.5, 1.5);
  std::normal_distribution<double> n(0.0, 0.4);
  Points pts;
  Vec p = Vec::Zero(d);
  pts.push_back(p);
  for (int i = 1; i < m; ++i) {
    Vec s(d);
    s(0) = step(rng);
    for (int j = 1; j < d; ++j) s(j) = n(rng);
    p += s;
    pts.push_back(p);
  }
  return pts;
}

Pose random_pose(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 2.0);
  Pose p{Vec(d), oracle::random_rotation(d, rng)};
  for (int j = 0; j < d; ++j) p.position(j) = n(rng);
  return p;
}

}  // namespace

TEST(GaussianJoint, SymmetricMidpoint) {
  const GaussianComponent a{0.5, v2(0, 0), Mat::Identity(2, 2)};
  const GaussianComponent b{0.5, v2(2, 0), Mat::Identity(2, 2)};
  EXPECT_NEAR((gaussian_joint(a, b) - v2(1, 0)).norm(), 0.0, 1e-15);
}

TEST(GaussianJoint, PrecisionWeightedMean) {
  const GaussianComponent a{0.5, v2(0, 0), Mat::Identity(2, 2)};
  const GaussianComponent b{0.5, v2(4, 0), 3.0 * Mat::Identity(2, 2)};
  // (1 * 0 + 1/3 * 4) / (1 + 1/3) = 1.
  EXPECT_NEAR((gaussian_joint(a, b) - v2(1, 0)).norm(), 0.0, 1e-14);
}

TEST(GaussianJoint, CoincidentMeans) {
  std::mt19937_64 rng(2);
  const Vec m = v2(0.7, -1.1);
  for (int i = 0; i < 50; ++i) {
    const GaussianComponent a{0.5, m, oracle::random_spd(2, rng, 0.01, 3.0)};
    const GaussianComponent b{0.5, m, oracle::random_spd(2, rng, 0.01, 3.0)};
    EXPECT_NEAR((gaussian_joint(a, b) - m).norm(), 0.0, 1e-13);
  }
}

TEST(BuildChain, SingleComponent) {
  const auto demo = Trajectory::uniform({v2(0, 0), v2(1, 0.1), v2(2, 0)}, 0.1);
  OrderedGmm g{{GaussianComponent{1.0, v2(1, 0.05), 0.3 * Mat::Identity(2, 2)}}, {0.5}};
  const auto chain = build_chain(g, demo);
  ASSERT_EQ(chain.joints.size(), 2u);
  EXPECT_EQ(chain.joints[0], v2(0, 0));
  EXPECT_EQ(chain.joints[1], v2(2, 0));
  EXPECT_EQ(chain.links.size(), 1u);
  EXPECT_DOUBLE_EQ(chain.link_lengths[0], 2.0);
}

TEST(BuildChain, TwoClusterJointMatchesProductOracle) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 0.3);
  Points pts;
  for (int i = 0; i < 200; ++i) pts.push_back(v2(n(rng), n(rng)));
  for (int i = 0; i < 200; ++i) pts.push_back(v2(10 + n(rng), n(rng)));
  GmmFitConfig cfg;
  cfg.k_max = 4;
  cfg.seed = 3;
  const auto comps = fit_gmm(pts, cfg);
  ASSERT_EQ(comps.size(), 2u);
  const auto demo = Trajectory::uniform(pts, 0.01);
  const auto chain = build_chain(order_components(comps, demo), v2(0, 0), v2(10, 0));
  ASSERT_EQ(chain.joints.size(), 3u);

  // Oracle: precision-weighted combination of the two means.
  const auto& a = chain.gmm.components[0];
  const auto& b = chain.gmm.components[1];
  const Mat pa = a.covariance.inverse();
  const Mat pb = b.covariance.inverse();
  const Vec expect = (pa + pb).inverse() * (pa * a.mean + pb * b.mean);
  EXPECT_NEAR((chain.joints[1] - expect).norm(), 0.0, 1e-12);
  EXPECT_GT(chain.joints[1](0), 0.5);
  EXPECT_LT(chain.joints[1](0), 9.5);
  // Small anisotropy in the fitted covariances tilts the product mean off the
  // axis by a fraction of the 10-unit separation.
  EXPECT_LT(std::abs(chain.joints[1](1)), 1.0);
}

TEST(BuildChain, RecoverWithOriginalJointsIsIdentity) {
  const auto chain = s_curve_chain();
  const auto rec = recover_gmm(chain, chain.joints);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    EXPECT_NEAR((rec[k].mean - chain.gmm.components[k].mean).norm(), 0.0, 1e-9);
    EXPECT_NEAR((rec[k].covariance - chain.gmm.components[k].covariance).norm(), 0.0, 1e-9);
    EXPECT_EQ(rec[k].prior, chain.gmm.components[k].prior);
  }
}

TEST(BuildChain, LinkFramesAreCanonical) {
  const auto chain = s_curve_chain();
  for (const auto& l : chain.links) {
    const Mat& v = l.eigenvectors_local;
    EXPECT_NEAR((v.transpose() * v - Mat::Identity(2, 2)).norm(), 0.0, 1e-12);
    for (int c = 0; c < v.cols(); ++c) EXPECT_GE(std::abs(v(0, l.along_axis)), std::abs(v(0, c)));
  }
}

TEST(BuildLaplacian, SmallCases) {
  const Eigen::MatrixXd l3 = Eigen::MatrixXd(build_laplacian(3).laplacian);
  Eigen::MatrixXd e3(3, 3);
  e3 << 1, -1, 0, -0.5, 1, -0.5, 0, -1, 1;
  EXPECT_EQ(l3, e3);
  const Eigen::MatrixXd l2 = Eigen::MatrixXd(build_laplacian(2).laplacian);
  Eigen::MatrixXd e2(2, 2);
  e2 << 1, -1, -1, 1;
  EXPECT_EQ(l2, e2);
  EXPECT_THROW(build_laplacian(1), Error);
}

TEST(BuildLaplacian, RowsSumToZeroAndMatchDenseOracle) {
  for (int m = 2; m < 40; ++m) {
    const Eigen::MatrixXd l = Eigen::MatrixXd(build_laplacian(m).laplacian);
    EXPECT_NEAR(l.rowwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_EQ(l, oracle::dense_laplacian(m));
  }
}

TEST(ConstrainedEdit, IdentityDescriptorKeepsJoints) {
  const auto chain = s_curve_chain();
  auto sys = build_laplacian(static_cast<int>(chain.joints.size()));
  sys.attach(chain.joints);
  const auto out = solve_constrained_edit(sys, chain.joints, chain.enter_frame(), chain.exit_frame());
  EXPECT_LT(max_diff(out, chain.joints), 1e-9);
}

TEST(ConstrainedEdit, TranslationIsExact) {
  const auto chain = s_curve_chain();
  auto sys = build_laplacian(static_cast<int>(chain.joints.size()));
  sys.attach(chain.joints);
  const Vec t = v2(0.37, -1.25);
  Pose s = chain.enter_frame();
  Pose e = chain.exit_frame();
  s.position += t;
  e.position += t;
  const auto out = solve_constrained_edit(sys, chain.joints, s, e);
  Points shifted = chain.joints;
  for (auto& p : shifted) p += t;
  EXPECT_LT(max_diff(out, shifted), 1e-9);
  EXPECT_LT(max_diff(out, oracle::kkt_edit(chain.joints, s, e)), 1e-9);
}

TEST(ConstrainedEdit, RotatedEndMatchesKktOracle) {
  Points joints{v2(0, 0), v2(1, 0), v2(2, 0.5), v2(3, 0)};
  auto sys = build_laplacian(4);
  sys.attach(joints);
  const Pose s = frame_from_two_points(joints[0], joints[1]);
  Pose e = synthetic::planar_pose(v2(3, 0), M_PI / 2);
  const auto out = solve_constrained_edit(sys, joints, s, e);
  EXPECT_LT(max_diff(out, oracle::kkt_edit(joints, s, e)), 1e-8);
  // The last link keeps its length and now points along +y into the end.
  EXPECT_NEAR((out[2] - v2(3, -std::sqrt(1.25))).norm(), 0.0, 1e-12);
}

TEST(ConstrainedEdit, RandomChainsMatchKktOracle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 2;
    const int m = 4 + trial % 8;  // 3..10 links
    const Points joints = random_joints(m, d, rng);
    auto sys = build_laplacian(m);
    sys.attach(joints);
    std::optional<Pose> s = random_pose(d, rng);
    std::optional<Pose> e = random_pose(d, rng);
    if (trial % 5 == 1) s.reset();
    if (trial % 5 == 2) e.reset();
    const auto out = solve_constrained_edit(sys, joints, s, e);
    ASSERT_LT(max_diff(out, oracle::kkt_edit(joints, s, e)), 1e-8) << "trial " << trial;
  }
}

TEST(ConstrainedEdit, ConflictingPinsAreRankDeficient) {
  // Two joints: start and end pins both constrain each joint.
  Points joints{v2(0, 0), v2(1, 0)};
  auto sys = build_laplacian(2);
  sys.attach(joints);
  const Pose s = synthetic::planar_pose(v2(0, 0), 0.0);
  const Pose e = synthetic::planar_pose(v2(5, 5), 1.0);
  try {
    solve_constrained_edit(sys, joints, s, e);
    FAIL() << "expected RankDeficientSystem";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kRankDeficientSystem);
  }
}

TEST(ConstrainedEdit, RequiresADescriptor) {
  Points joints{v2(0, 0), v2(1, 0), v2(2, 0)};
  auto sys = build_laplacian(3);
  sys.attach(joints);
  EXPECT_THROW(solve_constrained_edit(sys, joints, std::nullopt, std::nullopt), Error);
}

TEST(RecoverGmm, UniformScalingScalesAlongLinkOnly) {
  const auto chain = s_curve_chain();
  Points scaled = chain.joints;
  for (auto& p : scaled) p *= 2.0;
  const auto rec = recover_gmm(chain, scaled);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const Pose frame = frame_from_two_points(scaled[k], scaled[k + 1]);
    const Vec local = frame.to_local(rec[k].mean);
    const auto& link = chain.links[k];
    EXPECT_NEAR(local(0), 2.0 * link.mean_local(0), 1e-12);
    EXPECT_NEAR(local(1), link.mean_local(1), 1e-12);

    // Eigen-decompose the recovered covariance independently in the new frame.
    const Mat cov_local = frame.rotation.transpose() * rec[k].covariance * frame.rotation;
    const Vec ev_along = link.eigenvectors_local.col(link.along_axis);
    const int cross = 1 - link.along_axis;
    const Vec ev_cross = link.eigenvectors_local.col(cross);
    EXPECT_NEAR(ev_along.dot(cov_local * ev_along), 4.0 * link.eigenvalues(link.along_axis),
                1e-12 * std::max(1.0, link.eigenvalues.maxCoeff()));
    EXPECT_NEAR(ev_cross.dot(cov_local * ev_cross), link.eigenvalues(cross),
                1e-12 * std::max(1.0, link.eigenvalues.maxCoeff()));
  }
}

TEST(RecoverGmm, LinearScalingOption) {
  const auto chain = s_curve_chain(3);
  Points scaled = chain.joints;
  for (auto& p : scaled) p *= 3.0;
  const auto rec = recover_gmm(chain, scaled, EigenvalueScaling::kLinear);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const Pose frame = frame_from_two_points(scaled[k], scaled[k + 1]);
    const Mat cov_local = frame.rotation.transpose() * rec[k].covariance * frame.rotation;
    const auto& link = chain.links[k];
    const Vec ev = link.eigenvectors_local.col(link.along_axis);
    EXPECT_NEAR(ev.dot(cov_local * ev), 3.0 * link.eigenvalues(link.along_axis), 1e-12);
  }
}

TEST(RecoverGmm, RigidMotionEquivariance) {
  const auto chain = s_curve_chain();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat r = oracle::random_rotation(2, rng);
    const Vec t = v2(trial * 0.3, -0.2 * trial);
    Points moved = chain.joints;
    for (auto& p : moved) p = r * p + t;
    const auto rec = recover_gmm(chain, moved);
    for (std::size_t k = 0; k < rec.size(); ++k) {
      const auto& g = chain.gmm.components[k];
      EXPECT_NEAR((rec[k].mean - (r * g.mean + t)).norm(), 0.0, 1e-9);
      EXPECT_NEAR((rec[k].covariance - r * g.covariance * r.transpose()).norm(), 0.0, 1e-9);
    }
  }
}

TEST(RecoverGmm, WrongJointCount) {
  const auto chain = s_curve_chain(3);
  Points fewer(chain.joints.begin(), chain.joints.end() - 1);
  EXPECT_THROW(recover_gmm(chain, fewer), Error);
}

TEST(TransformChain, IdentityDescriptor) {
  const auto chain = s_curve_chain();
  const auto out = transform_chain(chain, chain.endpoint_descriptor());
  EXPECT_LT(max_diff(out.chain.joints, chain.joints), 1e-9);
  for (std::size_t k = 0; k < out.components.size(); ++k) {
    EXPECT_NEAR((out.components[k].mean - chain.gmm.components[k].mean).norm(), 0.0, 1e-9);
    EXPECT_NEAR((out.components[k].covariance - chain.gmm.components[k].covariance).norm(), 0.0, 1e-9);
  }
}

TEST(TransformChain, PureTranslation) {
  const auto chain = s_curve_chain();
  auto d = chain.endpoint_descriptor();
  const Vec t = v2(-2.0, 0.75);
  d.enter->position += t;
  d.exit->position += t;
  const auto out = transform_chain(chain, d);
  for (std::size_t k = 0; k < out.components.size(); ++k) {
    EXPECT_NEAR((out.components[k].mean - (chain.gmm.components[k].mean + t)).norm(), 0.0, 1e-9);
    EXPECT_NEAR((out.components[k].covariance - chain.gmm.components[k].covariance).norm(), 0.0, 1e-9);
  }
}

TEST(TransformChain, BothEndsShiftedHitsDescriptorFrames) {
  const auto demo = synthetic::s_curve();
  const auto chain = s_curve_chain();
  const auto d = synthetic::both_ends_shifted(demo);
  const auto out = transform_chain(chain, d);
  EXPECT_NEAR((out.chain.joints.front() - d.enter->position).norm(), 0.0, 1e-9);
  EXPECT_NEAR((out.chain.joints.back() - d.exit->position).norm(), 0.0, 1e-9);
  EXPECT_NEAR((out.chain.enter_frame().rotation - d.enter->rotation).norm(), 0.0, 1e-9);
  EXPECT_NEAR((out.chain.exit_frame().rotation - d.exit->rotation).norm(), 0.0, 1e-9);
  EXPECT_NEAR(out.chain.link_lengths.front(), chain.link_lengths.front(), 1e-9);
  EXPECT_NEAR(out.chain.link_lengths.back(), chain.link_lengths.back(), 1e-9);
}

TEST(TransformChain, RejectsInvalidDescriptor) {
  const auto chain = s_curve_chain(3);
  GeometricDescriptor d = chain.endpoint_descriptor();
  d.enter->rotation(0, 0) = 2.0;
  EXPECT_THROW(transform_chain(chain, d), Error);
}
