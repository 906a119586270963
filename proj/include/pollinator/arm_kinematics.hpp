#pragma once

#include "pollinator/geometry.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pollinator {

class KinematicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JointLimitError : public KinematicsError {
 public:
  using KinematicsError::KinematicsError;
};

class IllConditionedError : public KinematicsError {
 public:
  using KinematicsError::KinematicsError;
};

class RankDeficientError : public KinematicsError {
 public:
  using KinematicsError::KinematicsError;
};

/// Standard Denavit-Hartenberg row of a revolute joint:
/// T = Rz(q + offset) Tz(d) Tx(a) Rx(alpha).
struct DhJoint {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double offset = 0.0;
  double lower = -std::numbers::pi;
  double upper = std::numbers::pi;
};

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Twist = Eigen::Matrix<double, 6, 1>;

class SerialArmModel {
 public:
  SerialArmModel() = default;
  SerialArmModel(std::vector<DhJoint> joints, Pose3 base = {});

  /// Six-joint arm with about 0.95 m reach including a 0.1 m pollination tool.
  static SerialArmModel default_arm();

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<DhJoint>& joints() const { return joints_; }
  const Pose3& base() const { return base_; }
  /// Upper bound on the distance from the base origin to the end effector.
  double reach() const;

  bool within_limits(const JointVector& q, double tolerance = 0.0) const;
  void check_limits(const JointVector& q) const;
  JointVector clamp(const JointVector& q) const;

  /// Text format, one entry per line, '#' starts a comment:
  ///   joint <a> <alpha> <d> <offset> <lower> <upper>
  ///   base <x> <y> <z> <qw> <qx> <qy> <qz>
  static SerialArmModel parse(std::istream& in);
  static SerialArmModel load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

 private:
  std::vector<DhJoint> joints_;
  Pose3 base_;
};

Eigen::Matrix4d dh_transform(const DhJoint& joint, double q);

/// Frames of the base (index 0) and after every joint (index i+1).
std::vector<Eigen::Matrix4d> link_frames(const SerialArmModel& arm, const JointVector& q);

Pose3 forward_kinematics(const SerialArmModel& arm, const JointVector& q);

/// Geometric Jacobian in the base frame; rows (v, omega).
Jacobian jacobian(const SerialArmModel& arm, const JointVector& q);

/// True when the Jacobian is ill-conditioned: sigma_min / sigma_max < 1 / threshold.
bool condition_check(const Eigen::MatrixXd& j, double threshold);

/// q_dot = J^-1 x_dot for a square, well-conditioned J.
JointVector solve_joint_velocities(const Eigen::MatrixXd& j, const Twist& xdot, double condition_threshold = 100.0);

/// Minimum-norm q_dot with J_R q_dot = v, J_R the translational rows of J.
JointVector reduced_pseudoinverse_velocities(const Eigen::MatrixXd& j, const Vec3& v);

/// Position error and rotation-vector error from `current` to `target`.
Twist pose_error(const Pose3& current, const Pose3& target);

struct IkOptions {
  int max_iterations = 300;
  double damping = 0.05;
  double position_tolerance = 1e-5;
  double orientation_tolerance = 1e-4;
  double max_step = 0.2;  // radians per iteration
};

/// Damped least-squares inverse kinematics from the seed `q0`, respecting limits. Each
/// joint is returned as its 2*pi-equivalent angle farthest from the limits.
std::optional<JointVector> inverse_kinematics(const SerialArmModel& arm, const Pose3& target, const JointVector& q0,
                                              const IkOptions& options = {});

}  // namespace pollinator
