#include "pollinator/arm_kinematics.hpp"

#include "test_support.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

namespace pollinator {
namespace {

constexpr double kPi = std::numbers::pi;

SerialArmModel planar_two_link() {
  return SerialArmModel({DhJoint{.a = 1.0}, DhJoint{.a = 1.0}});
}

JointVector random_q(std::mt19937_64& rng, int dof, double span = kPi) {
  std::uniform_real_distribution<double> u(-span, span);
  JointVector q(dof);
  for (int i = 0; i < dof; ++i) q[i] = u(rng);
  return q;
}

// Independent DH product written out entry by entry.
Eigen::Matrix4d dh_oracle(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0, sa, ca, d,
       0, 0, 0, 1;
  return t;
}

Vec3 rotation_log(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

TEST(ForwardKinematics, PlanarTwoLink) {
  const SerialArmModel arm = planar_two_link();
  EXPECT_LT((forward_kinematics(arm, Eigen::Vector2d(0, 0)).position() - Vec3(2, 0, 0)).norm(), 1e-12);
  EXPECT_LT((forward_kinematics(arm, Eigen::Vector2d(kPi / 2, 0)).position() - Vec3(0, 2, 0)).norm(), 1e-12);
  EXPECT_LT((forward_kinematics(arm, Eigen::Vector2d(0, kPi / 2)).position() - Vec3(1, 1, 0)).norm(), 1e-12);
}

TEST(ForwardKinematics, MatchesIndependentDhProduct) {
  const Pose3 base(Vec3(0.1, -0.2, 0.05), Eigen::Quaterniond(Eigen::AngleAxisd(0.3, Vec3::UnitZ())));
  const SerialArmModel arm(SerialArmModel::default_arm().joints(), base);
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = random_q(rng, arm.dof());
    Eigen::Matrix4d t = base.matrix();
    for (int i = 0; i < arm.dof(); ++i) {
      const DhJoint& j = arm.joints()[i];
      t = t * dh_oracle(j.a, j.alpha, j.d, q[i] + j.offset);
    }
    const Pose3 fk = forward_kinematics(arm, q);
    EXPECT_LT((fk.matrix() - t).cwiseAbs().maxCoeff(), 1e-12);
    const std::vector<Eigen::Matrix4d> frames = link_frames(arm, q);
    ASSERT_EQ(frames.size(), static_cast<std::size_t>(arm.dof() + 1));
    EXPECT_LT((frames.back() - t).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForwardKinematics, StaysWithinReach) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(73);
  double farthest = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    JointVector q(arm.dof());
    for (int i = 0; i < arm.dof(); ++i)
      q[i] = std::uniform_real_distribution<double>(arm.joints()[i].lower, arm.joints()[i].upper)(rng);
    const Pose3 p = forward_kinematics(arm, q);
    EXPECT_TRUE(p.position().allFinite());
    EXPECT_LE(p.position().norm(), arm.reach() + 1e-12);
    farthest = std::max(farthest, p.position().norm());
  }
  EXPECT_GT(farthest, 0.8);
}

TEST(Jacobian, PlanarTwoLinkColumns) {
  const Jacobian j = jacobian(planar_two_link(), Eigen::Vector2d(0, 0));
  EXPECT_LT((j.block<3, 1>(0, 0) - Vec3(0, 2, 0)).norm(), 1e-12);
  EXPECT_LT((j.block<3, 1>(0, 1) - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((j.block<3, 1>(3, 0) - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(75);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = random_q(rng, arm.dof());
    const Jacobian j = jacobian(arm, q);
    Jacobian fd(6, arm.dof());
    for (int c = 0; c < arm.dof(); ++c) {
      JointVector qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      const Pose3 a = forward_kinematics(arm, qp), b = forward_kinematics(arm, qm);
      fd.block<3, 1>(0, c) = (a.position() - b.position()) / (2 * h);
      fd.block<3, 1>(3, c) = rotation_log(a.rotation() * b.rotation().transpose()) / (2 * h);
    }
    EXPECT_LT((j - fd).norm() / fd.norm(), 1e-5);
  }
}

TEST(ConditionCheck, Cases) {
  EXPECT_FALSE(condition_check(Eigen::MatrixXd::Identity(6, 6), 100.0));
  Eigen::MatrixXd zero_row = Eigen::MatrixXd::Identity(6, 6);
  zero_row.row(3).setZero();
  EXPECT_TRUE(condition_check(zero_row, 100.0));
  Eigen::VectorXd d = Eigen::VectorXd::Ones(6);
  d[5] = 1.0 / (2.0 * 100.0);
  EXPECT_TRUE(condition_check(d.asDiagonal().toDenseMatrix(), 100.0));
  d[5] = 2.0 / 100.0;
  EXPECT_FALSE(condition_check(d.asDiagonal().toDenseMatrix(), 100.0));
}

TEST(SolveJointVelocities, ZeroIdentityAndResidual) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(6, 6);
  EXPECT_EQ(solve_joint_velocities(eye, Twist::Zero()).norm(), 0.0);
  Twist e1 = Twist::Zero();
  e1[0] = 1.0;
  EXPECT_LT((solve_joint_velocities(eye, e1) - e1).norm(), 1e-15);

  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200 && solved < 100; ++trial) {
    const Jacobian j = jacobian(arm, random_q(rng, arm.dof()));
    if (condition_check(j, 100.0)) {
      EXPECT_THROW(solve_joint_velocities(j, e1), IllConditionedError);
      continue;
    }
    Twist x;
    for (int i = 0; i < 6; ++i) x[i] = n(rng);
    const JointVector qd = solve_joint_velocities(j, x);
    EXPECT_LT((j * qd - x).norm(), 1e-9);
    ++solved;
  }
  EXPECT_EQ(solved, 100);
}

TEST(ReducedPseudoinverse, BlockIdentityAndZero) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 6);
  j.block<3, 3>(0, 0).setIdentity();
  EXPECT_EQ(reduced_pseudoinverse_velocities(j, Vec3::Zero()).norm(), 0.0);
  const Vec3 v(0.1, -0.2, 0.3);
  JointVector expected = JointVector::Zero(6);
  expected.head<3>() = v;
  EXPECT_LT((reduced_pseudoinverse_velocities(j, v) - expected).norm(), 1e-15);
  EXPECT_THROW(reduced_pseudoinverse_velocities(Eigen::MatrixXd::Zero(6, 6), v), RankDeficientError);
}

TEST(ReducedPseudoinverse, ResidualAndMinimalNorm) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(79);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Jacobian j = jacobian(arm, random_q(rng, arm.dof()));
    const Eigen::MatrixXd jr = j.topRows<3>();
    const Vec3 v(n(rng), n(rng), n(rng));
    const JointVector qd = reduced_pseudoinverse_velocities(j, v);
    EXPECT_LT((jr * qd - v).norm(), 1e-9);
    const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(jr).kernel();
    for (int p = 0; p < 100; ++p) {
      Eigen::VectorXd c(kernel.cols());
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = 0.1 * n(rng);
      const JointVector other = qd + kernel * c;
      EXPECT_LT((jr * other - v).norm(), 1e-9);
      EXPECT_GE(other.norm(), qd.norm() - 1e-12);
    }
  }
}

TEST(InverseKinematics, RoundTripFromNearbySeed) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(81);
  std::normal_distribution<double> n(0.0, 0.15);
  int converged = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const JointVector q = random_q(rng, arm.dof(), 2.5);
    const Pose3 target = forward_kinematics(arm, q);
    JointVector seed = q;
    for (int i = 0; i < seed.size(); ++i) seed[i] += n(rng);
    const auto sol = inverse_kinematics(arm, target, seed, {.max_iterations = 1000});
    if (!sol) continue;
    ++converged;
    const Pose3 got = forward_kinematics(arm, *sol);
    EXPECT_LT((got.position() - target.position()).norm(), 1e-4);
    EXPECT_LT(rotation_angle_between(got.orientation(), target.orientation()), 1e-3);
    EXPECT_TRUE(arm.within_limits(*sol, 1e-9));
  }
  EXPECT_GE(converged, 45);
}

TEST(InverseKinematics, PrefersTurnFarthestFromLimits) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  std::mt19937_64 rng(83);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Pose3 target = forward_kinematics(arm, random_q(rng, arm.dof(), 3.0));
    JointVector seed = random_q(rng, arm.dof(), 3.0);
    seed[2] = std::clamp(seed[2], arm.joints()[2].lower, arm.joints()[2].upper);
    const auto sol = inverse_kinematics(arm, target, seed, {.max_iterations = 1000});
    if (!sol) continue;
    for (int i = 0; i < arm.dof(); ++i) {
      const DhJoint& j = arm.joints()[i];
      auto margin = [&](double a) { return std::min(a - j.lower, j.upper - a); };
      for (double turn : {-2.0 * kPi, 2.0 * kPi}) {
        EXPECT_GE(margin((*sol)[i]), margin((*sol)[i] + turn));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(InverseKinematics, UnreachableTargetFails) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  const Pose3 far(Vec3(3.0, 0.0, 0.0), Eigen::Quaterniond::Identity());
  EXPECT_FALSE(inverse_kinematics(arm, far, JointVector::Zero(6)).has_value());
}

TEST(PoseError, ZeroAtTargetAndTranslation) {
  std::mt19937_64 rng(83);
  const Pose3 p = test::random_pose(rng);
  EXPECT_LT(pose_error(p, p).norm(), 1e-12);
  const Pose3 moved(p.position() + Vec3(0.1, 0, 0), p.orientation());
  EXPECT_LT((pose_error(p, moved).head<3>() - Vec3(0.1, 0, 0)).norm(), 1e-12);
}

TEST(ArmModel, LimitsAndValidation) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  JointVector q = JointVector::Zero(6);
  EXPECT_NO_THROW(arm.check_limits(q));
  q[2] = 4.0;
  EXPECT_THROW(arm.check_limits(q), JointLimitError);
  EXPECT_DOUBLE_EQ(arm.clamp(q)[2], kPi);
  EXPECT_THROW(arm.check_limits(JointVector::Zero(5)), KinematicsError);
  EXPECT_THROW(SerialArmModel(std::vector<DhJoint>{}), KinematicsError);
  EXPECT_THROW(SerialArmModel({DhJoint{.lower = 1.0, .upper = -1.0}}), KinematicsError);
}

TEST(ArmModel, TextRoundTrip) {
  const Pose3 base(Vec3(0.1, 0.2, 0.3), Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Vec3::UnitY())));
  const SerialArmModel arm(SerialArmModel::default_arm().joints(), base);
  std::stringstream ss;
  arm.write(ss);
  const SerialArmModel back = SerialArmModel::parse(ss);
  ASSERT_EQ(back.dof(), arm.dof());
  std::mt19937_64 rng(85);
  const JointVector q = random_q(rng, arm.dof());
  EXPECT_LT((forward_kinematics(back, q).matrix() - forward_kinematics(arm, q).matrix()).cwiseAbs().maxCoeff(), 1e-12);

  std::istringstream bad("joint 0 0\n");
  EXPECT_THROW(SerialArmModel::parse(bad), KinematicsError);
  std::istringstream unknown("# comment\nlink 1 2 3\n");
  EXPECT_THROW(SerialArmModel::parse(unknown), KinematicsError);
  EXPECT_THROW(SerialArmModel::load("/nonexistent/arm.txt"), KinematicsError);
}

}  // namespace
}  // namespace pollinator
