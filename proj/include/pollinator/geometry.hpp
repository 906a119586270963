#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pollinator {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rigid transform. Orientation is stored as a unit quaternion with w >= 0.
class Pose3 {
 public:
  Pose3() = default;
  Pose3(const Vec3& position, const Eigen::Quaterniond& orientation);
  Pose3(const Vec3& position, const Mat3& rotation);

  static Pose3 identity() { return {}; }

  const Vec3& position() const { return position_; }
  const Eigen::Quaterniond& orientation() const { return orientation_; }
  Mat3 rotation() const { return orientation_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  Vec3 transform_point(const Vec3& p) const { return orientation_ * p + position_; }
  Vec3 rotate(const Vec3& v) const { return orientation_ * v; }

  /// Local z axis expressed in the parent frame.
  Vec3 z_axis() const { return rotation().col(2); }

 private:
  Vec3 position_ = Vec3::Zero();
  Eigen::Quaterniond orientation_ = Eigen::Quaterniond::Identity();
};

Pose3 compose_pose(const Pose3& a, const Pose3& b);
Pose3 invert_pose(const Pose3& p);

/// Angle of the relative rotation between two orientations, in [0, pi].
double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Rotation whose local z axis is `forward` and whose local y axis is as close as
/// possible to `down_hint` (camera convention: x right, y down, z forward).
Mat3 look_rotation(const Vec3& forward, const Vec3& down_hint = Vec3(0, 0, -1));

/// Quaternion canonicalized to unit norm and w >= 0.
Eigen::Quaterniond canonical(const Eigen::Quaterniond& q);

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole intrinsics. Camera frame: +z forward, +x right, +y down.
struct CameraIntrinsics {
  double fx = 460.0;
  double fy = 460.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
  bool contains(const PixelCoord& px) const {
    return px.u >= 0.0 && px.v >= 0.0 && px.u < width && px.v < height;
  }
};

Vec3 back_project(const PixelCoord& pixel, double depth, const CameraIntrinsics& k);
PixelCoord project(const Vec3& point, const CameraIntrinsics& k);

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Color and depth on the same pixel grid. Depth in meters, 0 marks an invalid pixel.
struct RgbdImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> rgb;
  std::vector<float> depth;

  RgbdImage() = default;
  RgbdImage(int w, int h, Rgb8 fill = {}, float depth_fill = 0.0f)
      : width(w), height(h),
        rgb(static_cast<std::size_t>(w) * h, fill),
        depth(static_cast<std::size_t>(w) * h, depth_fill) {}

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  Rgb8& color_at(int u, int v) { return rgb[index(u, v)]; }
  const Rgb8& color_at(int u, int v) const { return rgb[index(u, v)]; }
  float depth_at(int u, int v) const { return depth[index(u, v)]; }

  void validate() const;
};

}  // namespace pollinator
