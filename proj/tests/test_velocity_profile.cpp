#include <cmath>

#include <gtest/gtest.h>

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/errors.hpp"
#include "elastic_ds/synthetic.hpp"
#include "elastic_ds/velocity_profile.hpp"

using namespace elastic_ds;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no elastic_ds::Error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(JointProgress, EquallySpaced) {
  const auto l = joint_progress({v2(0, 0), v2(1, 0), v2(2, 0)});
  EXPECT_EQ(l, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(JointProgress, UnequalLinks) {
  const auto l = joint_progress({v2(0, 0), v2(1, 0), v2(1, 3)});
  EXPECT_DOUBLE_EQ(l[1], 0.25);
  EXPECT_DOUBLE_EQ(l[2], 1.0);
}

TEST(JointProgress, CoincidentJoints) {
  EXPECT_EQ(code_of([] { joint_progress({v2(0, 0), v2(1, 0), v2(1, 0)}); }), ErrorCode::kZeroLengthChain);
}

TEST(MapJointIndices, FloorRule) {
  EXPECT_EQ(map_joint_indices({0.0, 0.5, 1.0}, 11), (std::vector<int>{0, 5, 10}));
  EXPECT_EQ(map_joint_indices({0.0, 0.25, 1.0}, 5), (std::vector<int>{0, 1, 4}));
}

TEST(MapJointIndices, Collision) {
  EXPECT_EQ(code_of([] { map_joint_indices({0.0, 0.01, 1.0}, 5); }), ErrorCode::kIndexCollision);
}

TEST(RegenerateProfile, CollinearJointsGiveUniformLine) {
  const Points joints{v2(0, 0), v2(1, 0), v2(2, 0), v2(3, 0)};
  for (bool interp : {true, false}) {
    const ProfileConfig cfg{31, 0.1, interp};
    const auto t = regenerate_profile(joints, cfg);
    ASSERT_EQ(t.size(), 31u);
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_NEAR((t.points()[i] - v2(0.1 * static_cast<double>(i), 0)).norm(), 0.0, 1e-12);
    }
    // Interior Laplacian residuals vanish on a uniform line.
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      const Vec r = t.points()[i] - 0.5 * (t.points()[i - 1] + t.points()[i + 1]);
      EXPECT_NEAR(r.norm(), 0.0, 1e-12);
    }
    const auto& v = *t.velocities();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) EXPECT_NEAR((v[i] - v2(1.0, 0)).norm(), 0.0, 1e-10);
    EXPECT_TRUE(v.back().isZero(0.0));
  }
}

TEST(RegenerateProfile, PassesThroughCornerAtItsIndex) {
  const Points joints{v2(0, 0), v2(1, 0), v2(1, 1)};
  for (bool interp : {true, false}) {
    const auto t = regenerate_profile(joints, ProfileConfig{21, 0.05, interp});
    const auto j = map_joint_indices(joint_progress(joints), 21);
    ASSERT_EQ(j[1], 10);
    EXPECT_NEAR((t.points()[10] - v2(1, 0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((t.points().front() - v2(0, 0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((t.points().back() - v2(1, 1)).norm(), 0.0, 1e-12);
  }
}

TEST(RegenerateProfile, IdentityChainKeepsDemoLength) {
  for (const auto& name : synthetic::shape_names()) {
    const auto demo = synthetic::by_name(name);
    GmmFitConfig cfg;
    cfg.k_min = 3;
    const auto chain = build_chain(order_components(fit_gmm(demo.points(), cfg), demo), demo);
    const auto t = regenerate_profile(chain.joints, ProfileConfig::from_demo(demo));
    EXPECT_NEAR(t.arc_length(), demo.arc_length(), 0.05 * demo.arc_length()) << name;
    EXPECT_EQ(t.size(), demo.size());
    EXPECT_NEAR(t.median_dt(), demo.median_dt(), 1e-12);
  }
}

TEST(RegenerateProfile, RejectsBadConfig) {
  const Points joints{v2(0, 0), v2(1, 0), v2(2, 0)};
  EXPECT_THROW(regenerate_profile(joints, ProfileConfig{2, 0.1, true}), Error);
  EXPECT_THROW(regenerate_profile(joints, ProfileConfig{10, 0.0, true}), Error);
}

TEST(ProfileConfig, FromDemo) {
  const auto demo = synthetic::s_curve(150, 3.0);
  const auto cfg = ProfileConfig::from_demo(demo);
  EXPECT_EQ(cfg.points, 150);
  EXPECT_NEAR(cfg.dt, 3.0 / 149.0, 1e-12);
}
