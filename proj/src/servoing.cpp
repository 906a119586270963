#include "pollinator/servoing.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

namespace pollinator {

const char* servo_phase_name(ServoPhase p) {
  switch (p) {
    case ServoPhase::kParallelAlign: return "parallel_align";
    case ServoPhase::kOrthogonalApproach: return "orthogonal_approach";
    case ServoPhase::kTranslationOnly: return "translation_only";
    case ServoPhase::kBlindApproach: return "blind_approach";
    case ServoPhase::kContact: return "contact";
    case ServoPhase::kFailed: return "failed";
  }
  return "unknown";
}

void ServoParams::validate() const {
  if (!(parallel_threshold > 0.0 && contact_distance > 0.0 && joint_speed > 0.0 && dt > 0.0 &&
        condition_threshold > 0.0 && blind_trigger > 0.0 && max_steps > 0))
    throw std::invalid_argument("servo parameters must be positive");
  if (!(contact_distance < blind_trigger)) throw std::invalid_argument("contact distance must be below blind trigger");
}

Alignment compute_alignment(const Pose3& tip_pose, const Pose3& flower_pose) {
  Alignment a;
  a.d_g = flower_pose.position() - tip_pose.position();
  const Vec3 n = flower_pose.z_axis();
  a.d_par = a.d_g - a.d_g.dot(n) * n;
  return a;
}

ServoCommand servo_step(const ServoState& state, const SerialArmModel& arm, const JointVector& q,
                        const Pose3& flower_pose, const ServoParams& params) {
  ServoCommand cmd;
  cmd.qdot = JointVector::Zero(arm.dof());
  cmd.next = state;
  if (state.terminal()) return cmd;
  if (state.step >= params.max_steps) {
    cmd.next.phase = ServoPhase::kFailed;
    return cmd;
  }

  Jacobian j;
  Pose3 tip;
  try {
    tip = forward_kinematics(arm, q);
    j = jacobian(arm, q);
  } catch (const JointLimitError&) {
    cmd.next.phase = ServoPhase::kFailed;
    return cmd;
  }
  const Alignment al = compute_alignment(tip, flower_pose);
  cmd.next.d_par = al.d_par;
  cmd.next.d_g = al.d_g;

  ServoPhase active = state.phase == ServoPhase::kTranslationOnly ? state.resume : state.phase;
  if (al.d_g.norm() <= params.contact_distance) {
    cmd.next.phase = ServoPhase::kContact;
    return cmd;
  }
  if (active == ServoPhase::kParallelAlign && al.d_par.norm() < params.parallel_threshold)
    active = ServoPhase::kOrthogonalApproach;
  if (active == ServoPhase::kOrthogonalApproach && al.d_g.norm() < params.blind_trigger)
    active = ServoPhase::kBlindApproach;

  const Vec3 v = active == ServoPhase::kParallelAlign ? al.d_par : al.d_g;
  Twist xdot = Twist::Zero();
  xdot.head<3>() = v;

  if (condition_check(j, params.condition_threshold)) {
    cmd.next.phase = ServoPhase::kTranslationOnly;
    cmd.next.resume = active;
    try {
      cmd.qdot = reduced_pseudoinverse_velocities(j, v);
    } catch (const RankDeficientError&) {
      cmd.next.phase = ServoPhase::kFailed;
      cmd.qdot.setZero();
      return cmd;
    }
  } else {
    cmd.next.phase = active;
    cmd.next.resume = active;
    cmd.qdot = solve_joint_velocities(j, xdot, params.condition_threshold);
  }
  const double n = cmd.qdot.norm();
  if (n > 0.0) cmd.qdot *= params.joint_speed / n;
  cmd.next.step = state.step + 1;
  return cmd;
}

ServoRun run_servo(const SerialArmModel& arm, const JointVector& q0, const Pose3& flower_pose,
                   const ServoParams& params) {
  params.validate();
  ServoRun run;
  run.q = q0;
  ServoState state;
  while (!state.terminal()) {
    const ServoCommand cmd = servo_step(state, arm, run.q, flower_pose, params);
    state = cmd.next;
    run.telemetry.push_back({state.step, state.phase, state.d_par.norm(), state.d_g.norm(), run.q});
    run.q += cmd.qdot * params.dt;
  }
  run.final_state = state;
  return run;
}

void write_servo_trace_csv(std::ostream& out, const std::vector<ServoTelemetry>& trace) {
  out << "step,phase,d_par,d_g";
  const Eigen::Index n = trace.empty() ? 0 : trace.front().q.size();
  for (Eigen::Index i = 0; i < n; ++i) out << ",q" << i;
  out << '\n' << std::setprecision(9);
  for (const ServoTelemetry& t : trace) {
    out << t.step << ',' << servo_phase_name(t.phase) << ',' << t.d_par << ',' << t.d_g;
    for (Eigen::Index i = 0; i < t.q.size(); ++i) out << ',' << t.q[i];
    out << '\n';
  }
}

Pose3 plate_target(const ParallelPlatform& platform, const Pose3& flower_pose, const Pose3& tip_pose) {
  const Vec3 facing = tip_pose.rotation().transpose() * (-flower_pose.z_axis());
  Vec3 n = facing.normalized();
  if (n.z() < 0.0) n = -n;
  const double mid = 0.5 * (platform.stroke_min + platform.stroke_max);
  return Pose3(Vec3(0.0, 0.0, mid), Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), n));
}

PollinationTrace pollinate(const ParallelPlatform& platform, const HandEyeLUT& lut, const Pose3& flower_pose,
                           const Pose3& tip_pose, const PollinationOptions& options) {
  PollinationTrace trace;
  trace.aligned = query_ik_lut(lut, plate_target(platform, flower_pose, tip_pose), options.kappa);
  trace.aligned_plate = platform_forward_pose(platform, trace.aligned);
  const Vec3 rest = trace.aligned_plate.position();

  for (int c = 0; c < options.cycles; ++c) {
    const int toward = c % 3;
    const double sign = c % 2 == 0 ? 1.0 : -1.0;
    for (int s = 0; s < options.samples_per_cycle; ++s) {
      const double phi = 2.0 * std::numbers::pi * s / options.samples_per_cycle;
      const double push = options.extension_amplitude * 0.5 * (1.0 - std::cos(phi));
      const double tilt = sign * options.tilt_amplitude * std::sin(phi);
      PlatformCommand cmd = trace.aligned;
      for (int i = 0; i < 3; ++i) {
        const double diff = i == toward ? tilt : -0.5 * tilt;
        cmd[i] = std::clamp(cmd[i] + push + diff, platform.stroke_min, platform.stroke_max);
      }
      const Pose3 plate = platform_forward_pose(platform, cmd);
      trace.commands.push_back(cmd);
      trace.contact_points.push_back(tip_pose.transform_point(plate.position() - rest));
    }
  }
  return trace;
}

}  // namespace pollinator
