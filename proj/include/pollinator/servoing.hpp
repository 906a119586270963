#pragma once

#include "pollinator/arm_kinematics.hpp"
#include "pollinator/geometry.hpp"
#include "pollinator/parallel_platform.hpp"

#include <ostream>
#include <vector>

namespace pollinator {

enum class ServoPhase { kParallelAlign, kOrthogonalApproach, kTranslationOnly, kBlindApproach, kContact, kFailed };
const char* servo_phase_name(ServoPhase p);

struct ServoParams {
  double parallel_threshold = 0.005;  // epsilon_par, meters
  double contact_distance = 0.003;
  double joint_speed = 0.15;          // commanded ||q_dot||, rad/s
  double dt = 0.05;
  double condition_threshold = 100.0;
  double blind_trigger = 0.06;
  int max_steps = 1000;

  void validate() const;
};

struct Alignment {
  Vec3 d_par = Vec3::Zero();  // in-plane misalignment
  Vec3 d_g = Vec3::Zero();    // tip to flower
};

/// d_g = flower - tip; d_par = d_g without its component along the flower normal.
Alignment compute_alignment(const Pose3& tip_pose, const Pose3& flower_pose);

struct ServoState {
  ServoPhase phase = ServoPhase::kParallelAlign;
  ServoPhase resume = ServoPhase::kParallelAlign;  // phase to return to from TranslationOnly
  Vec3 d_par = Vec3::Zero();
  Vec3 d_g = Vec3::Zero();
  int step = 0;

  bool terminal() const { return phase == ServoPhase::kContact || phase == ServoPhase::kFailed; }
};

struct ServoCommand {
  JointVector qdot;
  ServoState next;
};

/// One control step. The Cartesian command is (d_par, 0) while aligning and (d_g, 0)
/// while approaching; joint rates come from J^-1, or from the translational
/// pseudo-inverse when J is ill-conditioned, and are rescaled to `joint_speed`.
ServoCommand servo_step(const ServoState& state, const SerialArmModel& arm, const JointVector& q,
                        const Pose3& flower_pose, const ServoParams& params);

struct ServoTelemetry {
  int step = 0;
  ServoPhase phase = ServoPhase::kParallelAlign;
  double d_par = 0.0;
  double d_g = 0.0;
  JointVector q;
};

struct ServoRun {
  ServoState final_state;
  JointVector q;
  std::vector<ServoTelemetry> telemetry;
};

/// Closed loop against a fixed flower pose with Euler integration of q.
ServoRun run_servo(const SerialArmModel& arm, const JointVector& q0, const Pose3& flower_pose,
                   const ServoParams& params = {});

/// "step,phase,d_par,d_g,q0..qn"
void write_servo_trace_csv(std::ostream& out, const std::vector<ServoTelemetry>& trace);

struct PollinationOptions {
  int cycles = 3;
  int samples_per_cycle = 8;
  double extension_amplitude = 0.004;
  double tilt_amplitude = 0.002;  // differential extension, meters
  double kappa = 0.05;
};

struct PollinationTrace {
  PlatformCommand aligned{};
  Pose3 aligned_plate;                  // end-effector frame
  std::vector<PlatformCommand> commands;
  std::vector<Vec3> contact_points;     // world frame plate centers
};

/// Plate pose (end-effector frame) that faces the flower from `tip_pose`, centered at
/// mid stroke.
Pose3 plate_target(const ParallelPlatform& platform, const Pose3& flower_pose, const Pose3& tip_pose);

/// Aligns the plate with the flower face through the LUT, then runs the cyclic
/// pattern: each cycle pushes out and back while tilting toward one actuator, with
/// the tilt direction alternating between cycles. Plate centers are reported
/// relative to the aligned plate center, which is placed at the tool tip.
PollinationTrace pollinate(const ParallelPlatform& platform, const HandEyeLUT& lut, const Pose3& flower_pose,
                           const Pose3& tip_pose, const PollinationOptions& options = {});

}  // namespace pollinator
