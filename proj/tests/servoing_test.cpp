#include "pollinator/servoing.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pollinator {
namespace {

constexpr double kPi = std::numbers::pi;

JointVector ready() {
  JointVector q(6);
  q << kPi, -kPi / 2, kPi / 2, -kPi / 2, -kPi / 2, 0.0;
  return q;
}

// Flower facing the tool, `standoff` ahead of the tip and `lateral` to its side.
Pose3 flower_ahead(const Pose3& tip, double standoff, const Vec3& lateral_tip_frame) {
  const Vec3 p = tip.transform_point(Vec3(0, 0, standoff) + lateral_tip_frame);
  return Pose3(p, tip.orientation() * Eigen::Quaterniond(Eigen::AngleAxisd(kPi, Vec3::UnitX())));
}

TEST(Alignment, DecomposesAlongNormal) {
  std::mt19937_64 rng(111);
  for (int i = 0; i < 100; ++i) {
    const Pose3 tip = test::random_pose(rng, 0.5), flower = test::random_pose(rng, 0.5);
    const Alignment a = compute_alignment(tip, flower);
    const Vec3 n = flower.z_axis();
    EXPECT_LT((a.d_g - (flower.position() - tip.position())).norm(), 1e-15);
    EXPECT_NEAR(a.d_par.dot(n), 0.0, 1e-12);
    EXPECT_LT((a.d_g - a.d_par - a.d_g.dot(n) * n).norm(), 1e-12);
    EXPECT_LE(a.d_par.norm(), a.d_g.norm() + 1e-15);
  }
}

TEST(ServoStep, ContactAtTheFlowerStopsImmediately) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  const Pose3 tip = forward_kinematics(arm, ready());
  const ServoParams params;
  const ServoCommand cmd = servo_step(ServoState{}, arm, ready(), flower_ahead(tip, 0.002, Vec3::Zero()), params);
  EXPECT_EQ(cmd.next.phase, ServoPhase::kContact);
  EXPECT_EQ(cmd.qdot.norm(), 0.0);
  const ServoCommand again = servo_step(cmd.next, arm, ready(), Pose3(), params);
  EXPECT_EQ(again.next.phase, ServoPhase::kContact);
}

TEST(ServoStep, CommandRescaledToJointSpeed) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  const Pose3 tip = forward_kinematics(arm, ready());
  const ServoParams params;
  const ServoCommand cmd = servo_step(ServoState{}, arm, ready(), flower_ahead(tip, 0.15, Vec3(0.03, 0, 0)), params);
  EXPECT_EQ(cmd.next.phase, ServoPhase::kParallelAlign);
  EXPECT_NEAR(cmd.qdot.norm(), params.joint_speed, 1e-12);
  // The commanded tip velocity points along d_par.
  const Vec3 v = (jacobian(arm, ready()) * cmd.qdot).head<3>();
  EXPECT_GT(v.normalized().dot(cmd.next.d_par.normalized()), 1.0 - 1e-9);
}

TEST(ServoStep, IllConditionedJacobianUsesTranslationOnly) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  JointVector q = ready();
  q[4] = 0.0;  // wrist axes 4 and 6 align
  const Jacobian j = jacobian(arm, q);
  ASSERT_TRUE(condition_check(j, 100.0));
  const Pose3 tip = forward_kinematics(arm, q);
  const ServoCommand cmd = servo_step(ServoState{}, arm, q, flower_ahead(tip, 0.15, Vec3(0.03, 0.01, 0)), ServoParams{});
  EXPECT_EQ(cmd.next.phase, ServoPhase::kTranslationOnly);
  EXPECT_EQ(cmd.next.resume, ServoPhase::kParallelAlign);
  const Vec3 v = (j * cmd.qdot).head<3>();
  EXPECT_GT(v.normalized().dot(cmd.next.d_par.normalized()), 1.0 - 1e-9);
}

TEST(ServoStep, MaxStepsFails) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  ServoState s;
  s.step = 3;
  ServoParams params;
  params.max_steps = 3;
  EXPECT_EQ(servo_step(s, arm, ready(), Pose3(Vec3(0.5, 0, 0.3), Eigen::Quaterniond::Identity()), params).next.phase, ServoPhase::kFailed);
}

TEST(RunServo, LateralErrorShrinksMonotonicallyThenContacts) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  const Pose3 tip = forward_kinematics(arm, ready());
  for (const Vec3& offset : {Vec3(0.03, 0, 0), Vec3(0, -0.03, 0), Vec3(0.02, 0.02, 0)}) {
    const Pose3 flower = flower_ahead(tip, 0.15, offset);
    const ServoRun run = run_servo(arm, ready(), flower);
    ASSERT_EQ(run.final_state.phase, ServoPhase::kContact);
    double prev = 1.0;
    bool aligned = false;
    for (const ServoTelemetry& t : run.telemetry) {
      if (t.phase != ServoPhase::kParallelAlign) aligned = true;
      if (aligned) break;
      EXPECT_LT(t.d_par, prev);
      prev = t.d_par;
    }
    EXPECT_TRUE(aligned);
    const Pose3 end = forward_kinematics(arm, run.q);
    EXPECT_LE((flower.position() - end.position()).norm(), ServoParams{}.contact_distance + 1e-12);
    EXPECT_LT(compute_alignment(end, flower).d_par.norm(), 0.002);
  }
}

TEST(RunServo, PhasesProgressInOrder) {
  const SerialArmModel arm = SerialArmModel::default_arm();
  const Pose3 tip = forward_kinematics(arm, ready());
  const ServoRun run = run_servo(arm, ready(), flower_ahead(tip, 0.15, Vec3(0.03, 0, 0)));
  std::vector<ServoPhase> seen;
  for (const ServoTelemetry& t : run.telemetry)
    if (seen.empty() || seen.back() != t.phase) seen.push_back(t.phase);
  EXPECT_EQ(seen, (std::vector<ServoPhase>{ServoPhase::kParallelAlign, ServoPhase::kOrthogonalApproach,
                                           ServoPhase::kBlindApproach, ServoPhase::kContact}));
  std::ostringstream out;
  write_servo_trace_csv(out, run.telemetry);
  EXPECT_EQ(out.str().rfind("step,phase,d_par,d_g,q0,q1,q2,q3,q4,q5\n", 0), 0u);
}

TEST(RunServo, RejectsInvalidParams) {
  ServoParams p;
  p.contact_distance = 0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ServoParams{};
  p.dt = 0.0;
  EXPECT_THROW(run_servo(SerialArmModel::default_arm(), ready(), Pose3(), p), std::invalid_argument);
}

TEST(Pollinate, FacingFlowerTrace) {
  const ParallelPlatform platform;
  const HandEyeLUT lut = build_ik_lut(platform);
  const Pose3 tip(Vec3(0.4, 0.0, 0.3), look_rotation(Vec3::UnitX()));
  const Pose3 flower = flower_ahead(tip, 0.0, Vec3::Zero());
  const PollinationOptions o;
  const PollinationTrace t = pollinate(platform, lut, flower, tip, o);
  ASSERT_EQ(t.commands.size(), 24u);
  EXPECT_EQ(t.aligned, (PlatformCommand{0.01, 0.01, 0.01}));
  double max_tilt = 0.0, max_push = 0.0;
  for (std::size_t i = 0; i < t.commands.size(); ++i) {
    for (double c : t.commands[i]) {
      EXPECT_GE(c, platform.stroke_min);
      EXPECT_LE(c, platform.stroke_max);
    }
    max_tilt = std::max(max_tilt, plate_tilt(platform_forward_pose(platform, t.commands[i])));
    max_push = std::max(max_push, (t.contact_points[i] - tip.position()).norm());
  }
  // Differential (t, -t/2, -t/2) tilts the plate by atan(t / r).
  EXPECT_NEAR(max_tilt, std::atan(o.tilt_amplitude / platform.radius), 1e-12);
  EXPECT_NEAR(max_push, o.extension_amplitude, 1e-12);
  EXPECT_LT((t.contact_points.front() - tip.position()).norm(), 1e-15);
  // Pushes point along the tool axis toward the flower.
  EXPECT_GT((t.contact_points[4] - tip.position()).dot(tip.z_axis()), 0.0039);
  // Alternating tilt direction between the first two cycles.
  EXPECT_GT(t.commands[2][0], t.commands[2][1]);
  EXPECT_LT(t.commands[10][1], t.commands[10][0]);
}

TEST(Pollinate, PlateFacesTiltedFlower) {
  const ParallelPlatform platform;
  const HandEyeLUT lut = build_ik_lut(platform);
  const Pose3 tip(Vec3(0.4, 0.0, 0.3), look_rotation(Vec3::UnitX()));
  const Pose3 facing = flower_ahead(tip, 0.0, Vec3::Zero());
  for (double angle : {0.1, 0.2, 0.3}) {
    const Pose3 flower(facing.position(),
                       facing.orientation() * Eigen::Quaterniond(Eigen::AngleAxisd(angle, Vec3::UnitY())));
    const Pose3 target = plate_target(platform, flower, tip);
    EXPECT_NEAR(plate_tilt(target), angle, 1e-12);
    const PollinationTrace t = pollinate(platform, lut, flower, tip);
    EXPECT_LT(std::abs(plate_tilt(t.aligned_plate) - angle), 0.06);
  }
}

}  // namespace
}  // namespace pollinator
