#pragma once

#include "pollinator/arm_kinematics.hpp"
#include "pollinator/geometry.hpp"
#include "pollinator/patch_classifier.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pollinator {

enum class SurfaceClass : int { kBackground = 0, kPetal, kAnther, kLeaf, kCane, kPaleCane };
inline constexpr int kSurfaceClassCount = 6;

struct ColorDistribution {
  std::array<double, 3> mean{};
  std::array<double, 3> sigma{};
};

struct SceneFlower {
  Vec3 position = Vec3::Zero();  // petal disc center
  Vec3 normal = Vec3::UnitX();   // outward face normal
  double petal_radius = 0.016;
  double anther_radius = 0.006;
  double anther_height = 0.003;  // anther disc offset along the normal
  OrientationClass orientation = OrientationClass::kC1;

  Pose3 pose() const;
};

struct SceneLeaf {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  Vec3 major_axis = Vec3::UnitZ();  // in-plane, orthogonal to normal
  double semi_major = 0.03;
  double semi_minor = 0.015;
};

struct SceneCane {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::UnitZ();
  double radius = 0.004;
  bool pale = false;  // distractor colored close to petals
};

struct SceneSpec {
  int scenario = 0;
  std::uint64_t seed = 0;
  std::vector<SceneFlower> flowers;
  std::vector<SceneLeaf> leaves;
  std::vector<SceneCane> canes;
  std::array<ColorDistribution, kSurfaceClassCount> colors{};
  /// Orientation classes of the flowers are relative to this point.
  Vec3 reference_point = Vec3::Zero();

  void validate() const;
};

std::array<ColorDistribution, kSurfaceClassCount> default_surface_colors();

struct NoiseSpec {
  double depth_sigma = 0.0;        // per-pixel depth noise at 0.4 m, grows linearly with range
  double pose_sigma = 0.0;         // per-observation position noise at 0.4 m, grows with range
  double extrinsic_sigma = 0.0;    // per-trial camera mounting offset, unknown to the estimator
  double color_sigma = 0.0;        // additive per-pixel color noise
  Eigen::Matrix3d orientation_confusion = Eigen::Matrix3d::Identity();  // rows: true class

  static NoiseSpec preset(const std::string& name);  // "off", "low", "default"
  void validate() const;
};

struct ScenarioTemplate {
  int id = 0;
  int reachable = 0;
  int unreachable = 0;
  int leaves = 0;
  int canes = 0;
  int pale_canes = 0;
  int trials = 5;
};

/// Scenario 0 is an empty plant; 1-8 are the bench scenarios.
ScenarioTemplate scenario_template(int id);
std::vector<int> bench_scenarios();

struct SceneLayout {
  Vec3 plant_center = Vec3(0.55, 0.0, 0.30);
  Vec3 plant_half_extent = Vec3(0.07, 0.17, 0.11);
  double reach = 0.7;                 // reachable flowers lie within this distance of the base
  double unreachable_min = 0.78;      // unreachable flowers lie at least this far
  double min_flower_spacing = 0.08;
  double orientation_jitter = 0.09;   // radians of yaw jitter around the class yaw
  double pitch_jitter = 0.12;
  double standoff = 0.15;
  double corridor_clearance = 0.035;  // leaves keep this far from approach corridors
  double sweep_radius = 0.45;         // reference camera distance in front of the plant center

  Vec3 reference_point() const { return plant_center - sweep_radius * Vec3::UnitX(); }
};

/// Seeded scene for a template. Reachable flowers have IK-feasible vantage poses
/// from `ready` when an arm is given.
SceneSpec generate_scene(const ScenarioTemplate& tmpl, std::uint64_t seed, const SceneLayout& layout = {},
                         const SerialArmModel* arm = nullptr, const JointVector* ready = nullptr);

/// Indices of flowers within `reach` of the arm base.
std::vector<int> reachable_flowers(const SceneSpec& scene, double reach = 0.7);

/// Camera poses on an arc around the plant center, looking at it.
std::vector<Pose3> sweep_camera_poses(const Vec3& plant_center, double radius,
                                      const std::vector<double>& azimuths_deg,
                                      const std::vector<double>& elevations_deg);

}  // namespace pollinator
