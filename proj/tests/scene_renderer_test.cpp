#include "pollinator/renderer.hpp"
#include "pollinator/scene.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace pollinator {
namespace {

const Pose3 kCamera(Vec3::Zero(), look_rotation(Vec3::UnitX(), Vec3(0, 0, -1)));

SceneSpec empty_scene() {
  SceneSpec s;
  s.colors = default_surface_colors();
  return s;
}

SceneLeaf wall_leaf(double x, double half) {
  SceneLeaf l;
  l.center = Vec3(x, 0, 0);
  l.normal = -Vec3::UnitX();
  l.major_axis = Vec3::UnitZ();
  l.semi_major = half;
  l.semi_minor = half;
  return l;
}

SceneFlower facing_flower(const Vec3& p) {
  SceneFlower f;
  f.position = p;
  f.normal = -Vec3::UnitX();
  return f;
}

int flower_pixels(const RenderedFrame& f) {
  int n = 0;
  for (int v = 0; v < f.image.height; ++v)
    for (int u = 0; u < f.image.width; ++u) n += f.is_flower(u, v);
  return n;
}

TEST(Scene, GenerationIsDeterministic) {
  const ScenarioTemplate t = scenario_template(4);
  const SceneSpec a = generate_scene(t, 17), b = generate_scene(t, 17), c = generate_scene(t, 18);
  ASSERT_EQ(a.flowers.size(), b.flowers.size());
  for (std::size_t i = 0; i < a.flowers.size(); ++i) {
    EXPECT_EQ(a.flowers[i].position, b.flowers[i].position);
    EXPECT_EQ(a.flowers[i].normal, b.flowers[i].normal);
    EXPECT_EQ(a.flowers[i].orientation, b.flowers[i].orientation);
  }
  ASSERT_EQ(a.leaves.size(), b.leaves.size());
  for (std::size_t i = 0; i < a.leaves.size(); ++i) EXPECT_EQ(a.leaves[i].center, b.leaves[i].center);
  EXPECT_NE(a.flowers[0].position, c.flowers[0].position);
}

TEST(Scene, TemplatesMatchReachableCounts) {
  const std::vector<int> expected{3, 3, 2, 2, 2, 4, 4, 4};
  const SerialArmModel arm = SerialArmModel::default_arm();
  JointVector ready(6);
  ready << std::numbers::pi, -std::numbers::pi / 2, std::numbers::pi / 2, -std::numbers::pi / 2,
      -std::numbers::pi / 2, 0.0;
  const SceneLayout layout;
  ASSERT_EQ(bench_scenarios().size(), expected.size());
  for (std::size_t s = 0; s < expected.size(); ++s) {
    const ScenarioTemplate t = scenario_template(bench_scenarios()[s]);
    EXPECT_EQ(t.reachable, expected[s]);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const SceneSpec scene = generate_scene(t, seed, layout, &arm, &ready);
      EXPECT_NO_THROW(scene.validate());
      EXPECT_EQ(static_cast<int>(scene.flowers.size()), t.reachable + t.unreachable);
      EXPECT_EQ(static_cast<int>(reachable_flowers(scene, layout.reach).size()), t.reachable);
      EXPECT_EQ(static_cast<int>(scene.leaves.size()), t.leaves);
      // One stem per flower plus the main and pale canes.
      EXPECT_EQ(static_cast<int>(scene.canes.size()), t.canes + t.pale_canes + t.reachable + t.unreachable);
      int pale = 0;
      for (const SceneCane& c : scene.canes) pale += c.pale;
      EXPECT_EQ(pale, t.pale_canes);
      for (std::size_t i = 0; i < scene.flowers.size(); ++i)
        for (std::size_t j = i + 1; j < scene.flowers.size(); ++j)
          EXPECT_GE((scene.flowers[i].position - scene.flowers[j].position).norm(), layout.min_flower_spacing);
    }
  }
  EXPECT_THROW(scenario_template(9), std::invalid_argument);
}

TEST(Scene, EmptyPlantHasNoFlowers) {
  const SceneSpec scene = generate_scene(scenario_template(0), 5);
  EXPECT_TRUE(scene.flowers.empty());
  const SceneLayout layout;
  for (const Pose3& cam : sweep_camera_poses(layout.plant_center, layout.sweep_radius, {-20, 0, 20}, {0}))
    EXPECT_EQ(flower_pixels(render_rgbd(scene, cam, CameraIntrinsics{}, NoiseSpec{}, 1)), 0);
}

TEST(Scene, SweepPosesLookAtCenter) {
  const Vec3 c(0.55, 0.0, 0.3);
  const std::vector<Pose3> poses = sweep_camera_poses(c, 0.45, {-40, -20, 0, 20, 40}, {0, 20});
  ASSERT_EQ(poses.size(), 10u);
  for (const Pose3& p : poses) {
    EXPECT_NEAR((p.position() - c).norm(), 0.45, 1e-12);
    EXPECT_LT((p.z_axis() - (c - p.position()).normalized()).norm(), 1e-12);
    EXPECT_LE(p.rotation().col(1).z(), 1e-12);  // image down points down or level
  }
  EXPECT_LT((poses[2].position() - Vec3(0.10, 0.0, 0.3)).norm(), 1e-12);
}

TEST(NoisePresets, Validate) {
  for (const char* name : {"off", "low", "default"}) {
    const NoiseSpec n = NoiseSpec::preset(name);
    EXPECT_NO_THROW(n.validate());
    for (int r = 0; r < 3; ++r) EXPECT_NEAR(n.orientation_confusion.row(r).sum(), 1.0, 1e-12);
  }
  EXPECT_EQ(NoiseSpec::preset("off").depth_sigma, 0.0);
  EXPECT_GT(NoiseSpec::preset("default").pose_sigma, NoiseSpec::preset("low").pose_sigma);
  EXPECT_THROW(NoiseSpec::preset("loud"), std::invalid_argument);
}

TEST(Renderer, EmptySceneHasNoDepth) {
  const CameraIntrinsics k;
  const RenderedFrame f = render_rgbd(empty_scene(), kCamera, k, NoiseSpec::preset("default"), 3);
  ASSERT_EQ(f.image.depth.size(), static_cast<std::size_t>(k.width * k.height));
  for (std::size_t i = 0; i < f.image.depth.size(); ++i) {
    EXPECT_EQ(f.image.depth[i], 0.0f);
    EXPECT_EQ(f.true_depth[i], 0.0f);
    EXPECT_EQ(f.surface[i], static_cast<std::uint8_t>(SurfaceClass::kBackground));
  }
}

TEST(Renderer, FrontalPlaneDepthStatistics) {
  SceneSpec scene = empty_scene();
  scene.leaves.push_back(wall_leaf(0.4, 0.6));
  const NoiseSpec noise = NoiseSpec::preset("default");
  const double sigma = noise.depth_sigma;
  const RenderedFrame f = render_rgbd(scene, kCamera, CameraIntrinsics{}, noise, 5);
  double sum = 0.0, sq = 0.0;
  int outside = 0;
  const auto n = static_cast<double>(f.image.depth.size());
  for (std::size_t i = 0; i < f.image.depth.size(); ++i) {
    EXPECT_NEAR(f.true_depth[i], 0.4, 1e-6);
    const double d = f.image.depth[i];
    sum += d;
    sq += (d - 0.4) * (d - 0.4);
    outside += std::abs(d - 0.4) > 3.0 * sigma;
  }
  EXPECT_NEAR(sum / n, 0.4, 1e-4);
  EXPECT_NEAR(std::sqrt(sq / n), sigma, 0.05 * sigma);
  // Gaussian tail beyond 3 sigma holds 0.27 %.
  EXPECT_LT(outside / n, 0.005);
}

TEST(Renderer, NoiseFreeDepthIsExact) {
  SceneSpec scene = empty_scene();
  scene.leaves.push_back(wall_leaf(0.5, 0.7));
  const RenderedFrame f = render_rgbd(scene, kCamera, CameraIntrinsics{}, NoiseSpec{}, 5);
  for (float d : f.image.depth) EXPECT_NEAR(d, 0.5, 1e-6);
}

TEST(Renderer, TooCloseReturnsNoDepth) {
  SceneSpec scene = empty_scene();
  scene.leaves.push_back(wall_leaf(0.05, 0.2));
  const RenderedFrame f = render_rgbd(scene, kCamera, CameraIntrinsics{}, NoiseSpec{}, 5);
  EXPECT_EQ(f.image.depth[f.image.index(320, 240)], 0.0f);
}

TEST(Renderer, LeafOccludesFlower) {
  const CameraIntrinsics k;
  SceneSpec scene = empty_scene();
  scene.flowers.push_back(facing_flower(Vec3(0.5, 0, 0)));
  const int visible = flower_pixels(render_rgbd(scene, kCamera, k, NoiseSpec{}, 1));
  // Disc of radius 16 mm at 0.5 m covers about pi * (460 * 0.016 / 0.5)^2 pixels.
  const double expected = std::numbers::pi * std::pow(k.fx * 0.016 / 0.5, 2);
  EXPECT_NEAR(visible, expected, 0.1 * expected);

  SceneSpec behind = scene;
  behind.leaves.push_back(wall_leaf(0.4, 0.05));
  EXPECT_EQ(flower_pixels(render_rgbd(behind, kCamera, k, NoiseSpec{}, 1)), 0);

  SceneSpec in_front = scene;
  in_front.leaves.push_back(wall_leaf(0.6, 0.05));
  const RenderedFrame f = render_rgbd(in_front, kCamera, k, NoiseSpec{}, 1);
  EXPECT_EQ(flower_pixels(f), visible);
  EXPECT_TRUE(f.is_flower(320, 240));
  EXPECT_EQ(static_cast<SurfaceClass>(f.surface[f.image.index(320, 240)]), SurfaceClass::kAnther);
  EXPECT_NEAR(f.true_depth[f.image.index(320, 240)], 0.5 - 0.003, 1e-6);
  EXPECT_EQ(static_cast<SurfaceClass>(f.surface[f.image.index(320 + 25, 240)]), SurfaceClass::kLeaf);
}

TEST(Renderer, SameSeedSameFrames) {
  const SceneSpec scene = generate_scene(scenario_template(6), 9);
  const SceneLayout layout;
  const Pose3 cam = sweep_camera_poses(layout.plant_center, layout.sweep_radius, {20}, {20})[0];
  const NoiseSpec noise = NoiseSpec::preset("default");
  const RenderedFrame a = render_rgbd(scene, cam, CameraIntrinsics{}, noise, 77);
  const RenderedFrame b = render_rgbd(scene, cam, CameraIntrinsics{}, noise, 77);
  const RenderedFrame c = render_rgbd(scene, cam, CameraIntrinsics{}, noise, 78);
  EXPECT_EQ(a.image.depth, b.image.depth);
  EXPECT_EQ(a.image.rgb, b.image.rgb);
  EXPECT_EQ(a.surface, c.surface);
  EXPECT_NE(a.image.depth, c.image.depth);

  SceneRenderer r(scene, CameraIntrinsics{}, noise, 77);
  const RenderedFrame first = r.render(cam);
  const RenderedFrame second = r.render(cam);
  EXPECT_EQ(first.image.depth, a.image.depth);
  EXPECT_NE(second.image.depth, first.image.depth);
  EXPECT_EQ(r.frames_rendered(), 2u);
}

}  // namespace
}  // namespace pollinator
