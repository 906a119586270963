#include "pollinator/arm_kinematics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

namespace pollinator {

namespace {

constexpr double kPi = std::numbers::pi;

Pose3 pose_from_matrix(const Eigen::Matrix4d& m) {
  return Pose3(Vec3(m.block<3, 1>(0, 3)), Mat3(m.block<3, 3>(0, 0)));
}

}  // namespace

SerialArmModel::SerialArmModel(std::vector<DhJoint> joints, Pose3 base)
    : joints_(std::move(joints)), base_(base) {
  if (joints_.empty()) throw KinematicsError("arm needs at least one joint");
  for (const DhJoint& j : joints_) {
    if (!(j.lower < j.upper)) throw KinematicsError("joint limits must satisfy lower < upper");
    if (!std::isfinite(j.a) || !std::isfinite(j.alpha) || !std::isfinite(j.d) || !std::isfinite(j.offset))
      throw KinematicsError("non-finite DH parameter");
  }
}

SerialArmModel SerialArmModel::default_arm() {
  const double two_pi = 2.0 * kPi;
  std::vector<DhJoint> joints = {
      {0.0, kPi / 2, 0.089159, 0.0, -two_pi, two_pi},
      {-0.425, 0.0, 0.0, 0.0, -two_pi, two_pi},
      {-0.39225, 0.0, 0.0, 0.0, -kPi, kPi},
      {0.0, kPi / 2, 0.10915, 0.0, -two_pi, two_pi},
      {0.0, -kPi / 2, 0.09465, 0.0, -two_pi, two_pi},
      {0.0, 0.0, 0.0823 + 0.10, 0.0, -two_pi, two_pi},
  };
  return SerialArmModel(std::move(joints));
}

double SerialArmModel::reach() const {
  double r = 0.0;
  for (const DhJoint& j : joints_) r += std::hypot(j.a, j.d);
  return r;
}

bool SerialArmModel::within_limits(const JointVector& q, double tolerance) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i)
    if (!std::isfinite(q[i]) || q[i] < joints_[i].lower - tolerance || q[i] > joints_[i].upper + tolerance)
      return false;
  return true;
}

void SerialArmModel::check_limits(const JointVector& q) const {
  if (q.size() != dof()) throw KinematicsError("joint vector size mismatch");
  for (int i = 0; i < dof(); ++i)
    if (!(q[i] >= joints_[i].lower && q[i] <= joints_[i].upper))
      throw JointLimitError("joint " + std::to_string(i) + " outside its limits");
}

JointVector SerialArmModel::clamp(const JointVector& q) const {
  JointVector out = q;
  for (int i = 0; i < dof(); ++i) out[i] = std::clamp(q[i], joints_[i].lower, joints_[i].upper);
  return out;
}

SerialArmModel SerialArmModel::parse(std::istream& in) {
  std::vector<DhJoint> joints;
  Pose3 base;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "joint") {
      DhJoint j;
      if (!(ls >> j.a >> j.alpha >> j.d >> j.offset >> j.lower >> j.upper))
        throw KinematicsError("line " + std::to_string(line_no) + ": malformed joint");
      joints.push_back(j);
    } else if (tag == "base") {
      double x, y, z, qw, qx, qy, qz;
      if (!(ls >> x >> y >> z >> qw >> qx >> qy >> qz))
        throw KinematicsError("line " + std::to_string(line_no) + ": malformed base");
      base = Pose3(Vec3(x, y, z), Eigen::Quaterniond(qw, qx, qy, qz));
    } else {
      throw KinematicsError("line " + std::to_string(line_no) + ": unknown entry '" + tag + "'");
    }
  }
  return SerialArmModel(std::move(joints), base);
}

SerialArmModel SerialArmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KinematicsError("cannot open arm model " + path.string());
  return parse(in);
}

void SerialArmModel::write(std::ostream& out) const {
  out << std::setprecision(17);
  out << "# joint a alpha d offset lower upper\n";
  for (const DhJoint& j : joints_)
    out << "joint " << j.a << ' ' << j.alpha << ' ' << j.d << ' ' << j.offset << ' ' << j.lower << ' ' << j.upper
        << '\n';
  const Vec3& p = base_.position();
  const Eigen::Quaterniond& q = base_.orientation();
  out << "base " << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' '
      << q.z() << '\n';
}

Eigen::Matrix4d dh_transform(const DhJoint& joint, double q) {
  const double theta = q + joint.offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(joint.alpha), sa = std::sin(joint.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, joint.a * ct,
       st, ct * ca, -ct * sa, joint.a * st,
       0.0, sa, ca, joint.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

std::vector<Eigen::Matrix4d> link_frames(const SerialArmModel& arm, const JointVector& q) {
  arm.check_limits(q);
  std::vector<Eigen::Matrix4d> frames;
  frames.reserve(arm.dof() + 1);
  frames.push_back(arm.base().matrix());
  for (int i = 0; i < arm.dof(); ++i) frames.push_back(frames.back() * dh_transform(arm.joints()[i], q[i]));
  return frames;
}

Pose3 forward_kinematics(const SerialArmModel& arm, const JointVector& q) {
  return pose_from_matrix(link_frames(arm, q).back());
}

Jacobian jacobian(const SerialArmModel& arm, const JointVector& q) {
  const std::vector<Eigen::Matrix4d> frames = link_frames(arm, q);
  const Vec3 pe = frames.back().block<3, 1>(0, 3);
  Jacobian j(6, arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    const Vec3 z = frames[i].block<3, 1>(0, 2);
    const Vec3 p = frames[i].block<3, 1>(0, 3);
    j.block<3, 1>(0, i) = z.cross(pe - p);
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

bool condition_check(const Eigen::MatrixXd& j, double threshold) {
  if (j.size() == 0) return true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (!(smax > 0.0)) return true;
  // Non-square matrices have min(rows, cols) singular values; a wide J with full
  // row rank is judged on those.
  return smin / smax < 1.0 / threshold;
}

JointVector solve_joint_velocities(const Eigen::MatrixXd& j, const Twist& xdot, double condition_threshold) {
  if (j.rows() != 6 || j.cols() != 6) throw KinematicsError("joint velocity solve needs a 6x6 Jacobian");
  if (condition_check(j, condition_threshold)) throw IllConditionedError("Jacobian is ill-conditioned");
  return j.partialPivLu().solve(xdot);
}

JointVector reduced_pseudoinverse_velocities(const Eigen::MatrixXd& j, const Vec3& v) {
  if (j.rows() < 3) throw KinematicsError("Jacobian needs translational rows");
  const Eigen::MatrixXd jr = j.topRows(3);
  const Mat3 jjt = jr * jr.transpose();
  Eigen::JacobiSVD<Mat3> svd(jjt);
  const Vec3& s = svd.singularValues();
  if (!(s[0] > 0.0) || s[2] / s[0] < 1e-12) throw RankDeficientError("translational Jacobian is rank deficient");
  return jr.transpose() * jjt.ldlt().solve(v);
}

Twist pose_error(const Pose3& current, const Pose3& target) {
  Twist e;
  e.head<3>() = target.position() - current.position();
  const Eigen::AngleAxisd aa(target.orientation() * current.orientation().conjugate());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > kPi) {
    angle = 2.0 * kPi - angle;
    axis = -axis;
  }
  e.tail<3>() = axis * angle;
  return e;
}

namespace {

// Among the 2*pi-equivalent angles within limits, the one farthest from both limits.
JointVector most_central_equivalent(const SerialArmModel& arm, JointVector q) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int i = 0; i < arm.dof(); ++i) {
    const DhJoint& j = arm.joints()[i];
    auto margin = [&](double a) { return std::min(a - j.lower, j.upper - a); };
    const double base = q[i];
    for (double turn : {-kTwoPi, kTwoPi})
      if (margin(base + turn) > margin(q[i])) q[i] = base + turn;
  }
  return q;
}

}  // namespace

std::optional<JointVector> inverse_kinematics(const SerialArmModel& arm, const Pose3& target, const JointVector& q0,
                                              const IkOptions& options) {
  JointVector q = arm.clamp(q0);
  const double lambda2 = options.damping * options.damping;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Twist e = pose_error(forward_kinematics(arm, q), target);
    if (e.head<3>().norm() < options.position_tolerance && e.tail<3>().norm() < options.orientation_tolerance)
      return most_central_equivalent(arm, q);
    const Jacobian j = jacobian(arm, q);
    const Eigen::Matrix<double, 6, 6> a = j * j.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    JointVector dq = j.transpose() * a.ldlt().solve(e);
    const double n = dq.norm();
    if (n > options.max_step) dq *= options.max_step / n;
    q = arm.clamp(q + dq);
  }
  const Twist e = pose_error(forward_kinematics(arm, q), target);
  if (e.head<3>().norm() < options.position_tolerance && e.tail<3>().norm() < options.orientation_tolerance)
    return most_central_equivalent(arm, q);
  return std::nullopt;
}

}  // namespace pollinator
