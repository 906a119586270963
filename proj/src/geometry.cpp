#include "pollinator/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pollinator {

Eigen::Quaterniond canonical(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond out = q.normalized();
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

Pose3::Pose3(const Vec3& position, const Eigen::Quaterniond& orientation)
    : position_(position), orientation_(canonical(orientation)) {}

Pose3::Pose3(const Vec3& position, const Mat3& rotation)
    : position_(position), orientation_(canonical(Eigen::Quaterniond(rotation))) {}

Eigen::Matrix4d Pose3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation();
  m.topRightCorner<3, 1>() = position_;
  return m;
}

Pose3 compose_pose(const Pose3& a, const Pose3& b) {
  return Pose3(a.position() + a.orientation() * b.position(), a.orientation() * b.orientation());
}

Pose3 invert_pose(const Pose3& p) {
  const Eigen::Quaterniond inv = p.orientation().conjugate();
  return Pose3(-(inv * p.position()), inv);
}

double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double d = std::abs(a.normalized().dot(b.normalized()));
  return 2.0 * std::acos(std::clamp(d, 0.0, 1.0));
}

Mat3 look_rotation(const Vec3& forward, const Vec3& down_hint) {
  const Vec3 z = forward.normalized();
  Vec3 y = down_hint - down_hint.dot(z) * z;
  if (y.norm() < 1e-9) {
    // Forward is parallel to the hint; any perpendicular works.
    y = z.unitOrthogonal();
  }
  y.normalize();
  const Vec3 x = y.cross(z);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw GeometryError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw GeometryError("image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw GeometryError("principal point outside image");
}

Vec3 back_project(const PixelCoord& pixel, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw GeometryError("invalid depth for back-projection");
  return {(pixel.u - k.cx) * depth / k.fx, (pixel.v - k.cy) * depth / k.fy, depth};
}

PixelCoord project(const Vec3& point, const CameraIntrinsics& k) {
  if (!(point.z() > 0.0)) throw GeometryError("point behind camera");
  return {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy};
}

void RgbdImage::validate() const {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (rgb.size() != n || depth.size() != n) throw GeometryError("rgb/depth size mismatch");
  for (float d : depth)
    if (!(d >= 0.0f)) throw GeometryError("negative or NaN depth");
}

}  // namespace pollinator
