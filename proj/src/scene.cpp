#include "pollinator/scene.hpp"

#include "pollinator/flower_map.hpp"
#include "pollinator/occupancy_octree.hpp"
#include "pollinator/planning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <limits>
#include <stdexcept>

namespace pollinator {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
  double best = std::numeric_limits<double>::infinity();
  const int samples = std::max(1, static_cast<int>(std::ceil((a1 - a0).norm() / 0.004)));
  for (int i = 0; i <= samples; ++i) {
    const Vec3 p = a0 + (a1 - a0) * (static_cast<double>(i) / samples);
    best = std::min(best, point_segment_distance(p, b0, b1));
  }
  return best;
}

Vec3 any_perpendicular(const Vec3& n) {
  const Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return (helper - helper.dot(n) * n).normalized();
}

struct Corridor {
  Vec3 a;
  Vec3 b;
};

}  // namespace

Pose3 SceneFlower::pose() const { return flower_pose(position, normal); }

std::array<ColorDistribution, kSurfaceClassCount> default_surface_colors() {
  std::array<ColorDistribution, kSurfaceClassCount> c{};
  c[static_cast<int>(SurfaceClass::kBackground)] = {{88, 78, 70}, {14, 12, 12}};
  c[static_cast<int>(SurfaceClass::kPetal)] = {{236, 222, 230}, {8, 10, 9}};
  c[static_cast<int>(SurfaceClass::kAnther)] = {{228, 196, 64}, {10, 12, 14}};
  c[static_cast<int>(SurfaceClass::kLeaf)] = {{52, 118, 44}, {12, 16, 10}};
  c[static_cast<int>(SurfaceClass::kCane)] = {{112, 72, 52}, {10, 10, 10}};
  c[static_cast<int>(SurfaceClass::kPaleCane)] = {{214, 200, 196}, {12, 12, 12}};
  return c;
}

void SceneSpec::validate() const {
  static constexpr double kBox = 1.5;
  auto inside = [](const Vec3& p) { return (p.array().abs() <= kBox).all(); };
  for (const SceneFlower& f : flowers) {
    if (!(f.anther_radius < f.petal_radius) || !(f.anther_radius > 0.0))
      throw std::invalid_argument("anther radius must be positive and below the petal radius");
    if (!inside(f.position)) throw std::invalid_argument("flower outside the workspace box");
    if (std::abs(f.normal.norm() - 1.0) > 1e-9) throw std::invalid_argument("flower normal must be unit length");
  }
  for (const SceneLeaf& l : leaves)
    if (!inside(l.center) || !(l.semi_major > 0.0 && l.semi_minor > 0.0))
      throw std::invalid_argument("invalid leaf");
  for (const SceneCane& c : canes)
    if (!inside(c.start) || !inside(c.end) || !(c.radius > 0.0)) throw std::invalid_argument("invalid cane");
}

NoiseSpec NoiseSpec::preset(const std::string& name) {
  NoiseSpec n;
  auto confusion = [](double diag) {
    const double off = 0.5 * (1.0 - diag);
    Eigen::Matrix3d m = Eigen::Matrix3d::Constant(off);
    m.diagonal().setConstant(diag);
    return m;
  };
  if (name == "off") return n;
  if (name == "low") {
    n.depth_sigma = 0.001;
    n.pose_sigma = 0.002;
    n.extrinsic_sigma = 0.0;
    n.color_sigma = 4.0;
    n.orientation_confusion = confusion(0.95);
    return n;
  }
  if (name == "default") {
    n.depth_sigma = 0.002;
    n.pose_sigma = 0.006;
    n.extrinsic_sigma = 0.003;
    n.color_sigma = 10.0;
    n.orientation_confusion = confusion(0.8);
    return n;
  }
  throw std::invalid_argument("unknown noise preset '" + name + "'");
}

void NoiseSpec::validate() const {
  if (depth_sigma < 0.0 || pose_sigma < 0.0 || extrinsic_sigma < 0.0 || color_sigma < 0.0)
    throw std::invalid_argument("noise sigmas must be nonnegative");
  for (int r = 0; r < 3; ++r) {
    if ((orientation_confusion.row(r).array() < 0.0).any() ||
        std::abs(orientation_confusion.row(r).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("confusion matrix rows must be distributions");
  }
}

ScenarioTemplate scenario_template(int id) {
  // id, reachable, unreachable, leaves, canes, pale canes, trials
  static const std::array<ScenarioTemplate, 9> kTemplates = {{
      {0, 0, 0, 6, 2, 1, 5},
      {1, 3, 1, 10, 2, 1, 5},
      {2, 3, 0, 12, 3, 2, 5},
      {3, 2, 1, 9, 2, 1, 6},
      {4, 2, 2, 14, 3, 2, 6},
      {5, 2, 0, 11, 2, 2, 5},
      {6, 4, 1, 12, 3, 1, 7},
      {7, 4, 0, 14, 3, 2, 7},
      {8, 4, 2, 16, 4, 3, 6},
  }};
  if (id < 0 || id >= static_cast<int>(kTemplates.size())) throw std::invalid_argument("unknown scenario");
  return kTemplates[id];
}

std::vector<int> bench_scenarios() { return {1, 2, 3, 4, 5, 6, 7, 8}; }

SceneSpec generate_scene(const ScenarioTemplate& tmpl, std::uint64_t seed, const SceneLayout& layout,
                         const SerialArmModel* arm, const JointVector* ready) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(tmpl.id) * 7919u + 1u);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);

  SceneSpec scene;
  scene.scenario = tmpl.id;
  scene.seed = seed;
  scene.colors = default_surface_colors();
  scene.reference_point = layout.reference_point();

  const Vec3& c = layout.plant_center;
  const Vec3& h = layout.plant_half_extent;
  auto in_box = [&](double x_lo, double x_hi) {
    return Vec3(x_lo + (x_hi - x_lo) * unit01(rng), c.y() + h.y() * unit(rng), c.z() + h.z() * unit(rng));
  };
  auto spaced = [&](const Vec3& p) {
    for (const SceneFlower& f : scene.flowers)
      if ((f.position - p).norm() < layout.min_flower_spacing) return false;
    return true;
  };
  auto make_flower = [&](const Vec3& p) {
    SceneFlower f;
    f.position = p;
    f.orientation = static_cast<OrientationClass>(std::uniform_int_distribution<int>(0, 2)(rng));
    const double yaw = orientation_yaw(f.orientation) + layout.orientation_jitter * unit(rng);
    const Vec3 horizontal = rotate_yaw(horizontal_direction(p, scene.reference_point), yaw);
    const double pitch = layout.pitch_jitter * unit(rng);
    f.normal = (std::cos(pitch) * horizontal + std::sin(pitch) * Vec3::UnitZ()).normalized();
    f.petal_radius = 0.015 + 0.003 * unit01(rng);
    f.anther_radius = 0.006;
    return f;
  };

  // Flowers keep out of each other's approach corridors.
  auto corridors_clear = [&](const SceneFlower& f) {
    const double length = layout.standoff + 0.05;
    for (const SceneFlower& o : scene.flowers) {
      const double gap = layout.corridor_clearance + std::max(f.petal_radius, o.petal_radius);
      if (point_segment_distance(o.position, f.position, f.position + length * f.normal) < gap) return false;
      if (point_segment_distance(f.position, o.position, o.position + length * o.normal) < gap) return false;
    }
    return true;
  };

  for (int placed = 0, attempt = 0; placed < tmpl.reachable; ++attempt) {
    if (attempt > 20000) throw std::runtime_error("could not place reachable flowers");
    const Vec3 p = in_box(c.x() - h.x(), c.x() + h.x());
    if (p.norm() > layout.reach - 0.02 || !spaced(p)) continue;
    SceneFlower f = make_flower(p);
    if (!corridors_clear(f)) continue;
    if (arm && ready) {
      const Pose3 vantage = vantage_pose(f.pose(), layout.standoff);
      if (!inverse_kinematics(*arm, vantage, *ready)) continue;
    }
    scene.flowers.push_back(f);
    ++placed;
  }
  for (int placed = 0, attempt = 0; placed < tmpl.unreachable; ++attempt) {
    if (attempt > 20000) throw std::runtime_error("could not place unreachable flowers");
    const Vec3 p = in_box(c.x() + 0.15, c.x() + 0.32);
    if (p.norm() < layout.unreachable_min || !spaced(p)) continue;
    scene.flowers.push_back(make_flower(p));
    ++placed;
  }

  std::vector<Corridor> corridors;
  for (const SceneFlower& f : scene.flowers) {
    corridors.push_back({f.position, f.position + (layout.standoff + 0.1) * f.normal});
    corridors.push_back({f.position, scene.reference_point});
  }
  auto clear_of_flowers = [&](const Vec3& a, const Vec3& b, double size) {
    for (const Corridor& k : corridors)
      if (segment_distance(a, b, k.a, k.b) < size + layout.corridor_clearance) return false;
    for (const SceneFlower& f : scene.flowers)
      if (segment_distance(a, b, f.position, f.position) < size + f.petal_radius + 0.01) return false;
    return true;
  };

  // Stalks attach every flower to the plant.
  for (const SceneFlower& f : scene.flowers) {
    const Vec3 back = Vec3(-f.normal.x(), -f.normal.y(), 0.0).normalized();
    const Vec3 dir = (0.6 * back - 0.8 * Vec3::UnitZ()).normalized();
    const Vec3 start = f.position - 0.005 * f.normal;
    scene.canes.push_back({start, start + 0.07 * dir, 0.0025, false});
  }

  auto place_canes = [&](int count, bool pale) {
    for (int placed = 0, attempt = 0; placed < count && attempt < 5000; ++attempt) {
      SceneCane cane;
      cane.pale = pale;
      if (pale) {
        const Vec3 mid = in_box(c.x() - h.x(), c.x() + h.x());
        const Vec3 dir = Vec3(0.3 * unit(rng), 0.3 * unit(rng), 1.0).normalized();
        const double len = 0.05 + 0.05 * unit01(rng);
        cane.start = mid - 0.5 * len * dir;
        cane.end = mid + 0.5 * len * dir;
        cane.radius = 0.0035;
      } else {
        const double x = c.x() + h.x() * (0.3 + 0.7 * unit01(rng));
        const double y = c.y() + h.y() * unit(rng);
        cane.start = Vec3(x, y, c.z() - h.z() - 0.08);
        cane.end = Vec3(x + 0.05 * unit(rng), y + 0.05 * unit(rng), c.z() + h.z() + 0.08);
        cane.radius = 0.005;
      }
      if (!clear_of_flowers(cane.start, cane.end, cane.radius)) continue;
      scene.canes.push_back(cane);
      ++placed;
    }
  };
  place_canes(tmpl.canes, false);
  place_canes(tmpl.pale_canes, true);

  for (int placed = 0, attempt = 0; placed < tmpl.leaves && attempt < 5000; ++attempt) {
    SceneLeaf leaf;
    leaf.center = in_box(c.x() - h.x() - 0.02, c.x() + h.x() + 0.05);
    leaf.semi_major = 0.02 + 0.015 * unit01(rng);
    leaf.semi_minor = leaf.semi_major * (0.5 + 0.2 * unit01(rng));
    const Vec3 facing = (scene.reference_point - leaf.center).normalized();
    leaf.normal = (facing + 0.6 * Vec3(unit(rng), unit(rng), unit(rng))).normalized();
    const Vec3 perp = any_perpendicular(leaf.normal);
    const double spin = std::numbers::pi * unit(rng);
    leaf.major_axis = (std::cos(spin) * perp + std::sin(spin) * leaf.normal.cross(perp)).normalized();
    if (!clear_of_flowers(leaf.center, leaf.center, leaf.semi_major)) continue;
    scene.leaves.push_back(leaf);
    ++placed;
  }

  scene.validate();
  return scene;
}

std::vector<int> reachable_flowers(const SceneSpec& scene, double reach) {
  std::vector<int> out;
  for (std::size_t i = 0; i < scene.flowers.size(); ++i)
    if (scene.flowers[i].position.norm() <= reach) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<Pose3> sweep_camera_poses(const Vec3& plant_center, double radius,
                                      const std::vector<double>& azimuths_deg,
                                      const std::vector<double>& elevations_deg) {
  std::vector<Pose3> poses;
  for (double el : elevations_deg)
    for (double az : azimuths_deg) {
      const double a = az * kDeg, e = el * kDeg;
      const Vec3 offset(-std::cos(e) * std::cos(a), -std::cos(e) * std::sin(a), std::sin(e));
      const Vec3 position = plant_center + radius * offset;
      poses.emplace_back(position, look_rotation(plant_center - position, Vec3(0, 0, -1)));
    }
  return poses;
}

}  // namespace pollinator
