#pragma once

#include "pollinator/geometry.hpp"

#include <array>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace pollinator {

class StrokeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actuator extensions in meters.
using PlatformCommand = std::array<double, 3>;

/// Three linear actuators on a circle, 120 degrees apart, pushing a plate along the
/// end-effector z axis. Actuator 0 sits on the +x axis.
struct ParallelPlatform {
  double radius = 0.012;
  double stroke_min = 0.0;
  double stroke_max = 0.020;

  void validate() const;
  Vec3 actuator_base(int i) const;
  bool within_stroke(const PlatformCommand& cmd) const;
};

/// Plate pose in the end-effector frame: plane through the three actuator tips,
/// centered on their centroid, rotated minimally from the end-effector z axis.
Pose3 platform_forward_pose(const ParallelPlatform& platform, const PlatformCommand& cmd);

/// Angle between the plate normal and the end-effector z axis.
double plate_tilt(const Pose3& plate_pose);

struct HandEyeEntry {
  PlatformCommand command{};
  Pose3 pose;
};

/// Exhaustive grid of actuator commands with their plate poses.
class HandEyeLUT {
 public:
  HandEyeLUT() = default;

  const std::vector<HandEyeEntry>& entries() const { return entries_; }
  double grid_step() const { return step_; }
  double stroke_min() const { return stroke_min_; }
  double stroke_max() const { return stroke_max_; }

  /// Binary dump: "PHEL", version, step, stroke range, entry count, then per entry the
  /// command and pose (x y z qw qx qy qz), all little-endian doubles.
  void save(const std::filesystem::path& path) const;
  static HandEyeLUT load(const std::filesystem::path& path);

 private:
  friend HandEyeLUT build_ik_lut(const ParallelPlatform&, double);
  double step_ = 0.0;
  double stroke_min_ = 0.0;
  double stroke_max_ = 0.0;
  std::vector<HandEyeEntry> entries_;
};

/// Commands enumerated with actuator 0 slowest, so entry order is command order.
HandEyeLUT build_ik_lut(const ParallelPlatform& platform, double grid_step = 0.001);

/// Index of the entry minimizing ||dp|| + kappa * angle; ties go to the lowest index.
std::size_t query_ik_lut_index(const HandEyeLUT& lut, const Pose3& target, double kappa = 0.05);
PlatformCommand query_ik_lut(const HandEyeLUT& lut, const Pose3& target, double kappa = 0.05);

}  // namespace pollinator
