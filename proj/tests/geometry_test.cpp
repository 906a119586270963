#include "pollinator/geometry.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace pollinator {
namespace {

TEST(BackProject, PrincipalPointMapsToOpticalAxis) {
  const CameraIntrinsics k;
  const Vec3 p = back_project({k.cx, k.cy}, 1.0, k);
  EXPECT_NEAR(p.x(), 0.0, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.z(), 1.0);
}

TEST(BackProject, OneFocalLengthOffsetGivesUnitTangent) {
  const CameraIntrinsics k;
  const Vec3 p = back_project({k.cx + k.fx, k.cy}, 2.0, k);
  EXPECT_NEAR((p - Vec3(2.0, 0.0, 2.0)).norm(), 0.0, 1e-12);
}

TEST(BackProject, RejectsNonPositiveDepth) {
  const CameraIntrinsics k;
  EXPECT_THROW(back_project({10, 10}, 0.0, k), GeometryError);
  EXPECT_THROW(back_project({10, 10}, -1.0, k), GeometryError);
}

TEST(Project, DirectSubstitution) {
  CameraIntrinsics k;
  k.fx = 100.0;
  const PixelCoord a = project(Vec3(0, 0, 1), k);
  EXPECT_DOUBLE_EQ(a.u, k.cx);
  EXPECT_DOUBLE_EQ(a.v, k.cy);
  const PixelCoord b = project(Vec3(1, 0, 1), k);
  EXPECT_DOUBLE_EQ(b.u, 420.0);
  EXPECT_DOUBLE_EQ(b.v, k.cy);
  EXPECT_THROW(project(Vec3(0, 0, -1), k), GeometryError);
}

TEST(Project, RoundTripWithBackProject) {
  const CameraIntrinsics k;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, k.width), v(0.0, k.height), z(0.1, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const PixelCoord px{u(rng), v(rng)};
    const PixelCoord back = project(back_project(px, z(rng), k), k);
    EXPECT_NEAR(back.u, px.u, 1e-9);
    EXPECT_NEAR(back.v, px.v, 1e-9);
  }
}

TEST(Intrinsics, Validation) {
  CameraIntrinsics k;
  EXPECT_NO_THROW(k.validate());
  k.fx = 0.0;
  EXPECT_THROW(k.validate(), GeometryError);
  k = {};
  k.cx = k.width;
  EXPECT_THROW(k.validate(), GeometryError);
}

TEST(Pose3, ComposeWithIdentity) {
  std::mt19937_64 rng(5);
  const Pose3 p = test::random_pose(rng);
  const Pose3 c = compose_pose(Pose3::identity(), p);
  EXPECT_NEAR((c.position() - p.position()).norm(), 0.0, 1e-15);
  EXPECT_NEAR(rotation_angle_between(c.orientation(), p.orientation()), 0.0, 1e-9);
}

TEST(Pose3, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose3 p = test::random_pose(rng, 3.0);
    for (const Pose3& c : {compose_pose(p, invert_pose(p)), compose_pose(invert_pose(p), p)}) {
      EXPECT_LT(c.position().norm(), 1e-9);
      EXPECT_LT(rotation_angle_between(c.orientation(), Eigen::Quaterniond::Identity()), 1e-9);
    }
  }
}

TEST(Pose3, QuaternionStaysCanonical) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Pose3 a = test::random_pose(rng), b = test::random_pose(rng);
    const Pose3 c = compose_pose(a, b);
    EXPECT_NEAR(c.orientation().norm(), 1.0, 1e-9);
    EXPECT_GE(c.orientation().w(), 0.0);
  }
}

TEST(Pose3, ComposeMatchesMatrixProduct) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Pose3 a = test::random_pose(rng), b = test::random_pose(rng);
    const Eigen::Matrix4d expected = a.matrix() * b.matrix();
    EXPECT_LT((compose_pose(a, b).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
    const Vec3 p(0.3, -0.2, 0.9);
    EXPECT_LT((compose_pose(a, b).transform_point(p) - a.transform_point(b.transform_point(p))).norm(), 1e-12);
  }
}

TEST(LookRotation, ForwardAndDownHint) {
  const Mat3 r = look_rotation(Vec3(1, 0, 0), Vec3(0, 0, -1));
  EXPECT_LT((r.col(2) - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((r.col(1) - Vec3(0, 0, -1)).norm(), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Vec3 f = test::random_unit(rng);
    const Mat3 m = look_rotation(f);
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).norm(), 1e-12);
    EXPECT_LT((m.col(2) - f).norm(), 1e-12);
  }
}

TEST(RgbdImage, Validation) {
  RgbdImage img(4, 3);
  EXPECT_NO_THROW(img.validate());
  img.depth[2] = -1.0f;
  EXPECT_THROW(img.validate(), GeometryError);
  img = RgbdImage(4, 3);
  img.depth.pop_back();
  EXPECT_THROW(img.validate(), GeometryError);
}

}  // namespace
}  // namespace pollinator
