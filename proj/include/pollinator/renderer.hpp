#pragma once

#include "pollinator/geometry.hpp"
#include "pollinator/scene.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace pollinator {

struct RenderOptions {
  double min_depth = 0.11;  // closer surfaces return no depth
  double max_depth = 2.0;
  Vec3 light_direction = Vec3(-0.3, -0.5, -1.0);  // camera frame, toward the light
};

/// Rendered frame plus per-pixel ground truth.
struct RenderedFrame {
  RgbdImage image;
  std::vector<std::uint8_t> surface;  // SurfaceClass per pixel
  std::vector<float> true_depth;      // noise-free depth, 0 where nothing was hit

  bool is_flower(int u, int v) const;
};

/// Z-buffered ray caster over the scene primitives with class-conditional colors,
/// Lambertian shading from a camera-fixed light, and range-proportional depth noise.
/// Deterministic: frame k of a renderer depends only on the seed and k.
class SceneRenderer {
 public:
  SceneRenderer(const SceneSpec& scene, const CameraIntrinsics& k, const NoiseSpec& noise, std::uint64_t seed,
                RenderOptions options = {});
  ~SceneRenderer();
  SceneRenderer(SceneRenderer&&) noexcept;
  SceneRenderer& operator=(SceneRenderer&&) noexcept;

  RenderedFrame render(const Pose3& camera_pose);
  std::uint64_t frames_rendered() const { return frame_; }

 private:
  struct Primitive;
  void build_primitives();

  SceneSpec scene_;
  CameraIntrinsics k_;
  NoiseSpec noise_;
  std::uint64_t seed_;
  RenderOptions options_;
  std::uint64_t frame_ = 0;
  std::vector<Primitive> primitives_;
  std::shared_ptr<const std::vector<float>> normals_table_;
};

/// Standard-normal samples shared by renderers; indexed with a per-frame offset.
std::shared_ptr<const std::vector<float>> gaussian_table();

/// Back-projected pixel rays: direction through pixel (u, v) in the camera frame.
inline Vec3 pixel_ray(const CameraIntrinsics& k, int u, int v) {
  return Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
}

/// One frame from a fresh renderer.
RenderedFrame render_rgbd(const SceneSpec& scene, const Pose3& camera_pose, const CameraIntrinsics& k,
                          const NoiseSpec& noise, std::uint64_t seed);

}  // namespace pollinator
