#include "pollinator/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pollinator {

namespace {

constexpr std::size_t kTableBits = 20;
constexpr std::size_t kTableSize = std::size_t{1} << kTableBits;
constexpr std::size_t kTableMask = kTableSize - 1;

enum class Shape { kDisc, kEllipse, kCylinder };

}  // namespace

struct SceneRenderer::Primitive {
  Shape shape = Shape::kDisc;
  SurfaceClass surface = SurfaceClass::kBackground;
  Vec3 center = Vec3::Zero();  // disc/ellipse center, cylinder start
  Vec3 normal = Vec3::UnitZ(); // disc/ellipse normal, cylinder axis (unit)
  Vec3 major = Vec3::UnitX();
  Vec3 minor = Vec3::UnitY();
  double a = 0.0;  // radius / semi-major / cylinder radius
  double b = 0.0;  // semi-minor / cylinder length
  Vec3 bound_center = Vec3::Zero();
  double bound_radius = 0.0;
};

bool RenderedFrame::is_flower(int u, int v) const {
  const auto s = static_cast<SurfaceClass>(surface[image.index(u, v)]);
  return s == SurfaceClass::kPetal || s == SurfaceClass::kAnther;
}

std::shared_ptr<const std::vector<float>> gaussian_table() {
  static const std::shared_ptr<const std::vector<float>> table = [] {
    auto t = std::make_shared<std::vector<float>>(kTableSize);
    std::mt19937_64 rng(0x5EEDF00Dull);
    std::normal_distribution<double> n(0.0, 1.0);
    for (float& x : *t) x = static_cast<float>(n(rng));
    return t;
  }();
  return table;
}

SceneRenderer::SceneRenderer(const SceneSpec& scene, const CameraIntrinsics& k, const NoiseSpec& noise,
                             std::uint64_t seed, RenderOptions options)
    : scene_(scene), k_(k), noise_(noise), seed_(seed), options_(options), normals_table_(gaussian_table()) {
  k_.validate();
  noise_.validate();
  options_.light_direction.normalize();
  build_primitives();
}

SceneRenderer::~SceneRenderer() = default;
SceneRenderer::SceneRenderer(SceneRenderer&&) noexcept = default;
SceneRenderer& SceneRenderer::operator=(SceneRenderer&&) noexcept = default;

void SceneRenderer::build_primitives() {
  for (const SceneFlower& f : scene_.flowers) {
    Primitive petal;
    petal.shape = Shape::kDisc;
    petal.surface = SurfaceClass::kPetal;
    petal.center = f.position;
    petal.normal = f.normal;
    petal.a = f.petal_radius;
    petal.bound_center = f.position;
    petal.bound_radius = f.petal_radius;
    primitives_.push_back(petal);
    Primitive anther = petal;
    anther.surface = SurfaceClass::kAnther;
    anther.center = f.position + f.anther_height * f.normal;
    anther.a = f.anther_radius;
    anther.bound_center = anther.center;
    anther.bound_radius = f.anther_radius;
    primitives_.push_back(anther);
  }
  for (const SceneLeaf& l : scene_.leaves) {
    Primitive p;
    p.shape = Shape::kEllipse;
    p.surface = SurfaceClass::kLeaf;
    p.center = l.center;
    p.normal = l.normal.normalized();
    p.major = l.major_axis.normalized();
    p.minor = p.normal.cross(p.major).normalized();
    p.a = l.semi_major;
    p.b = l.semi_minor;
    p.bound_center = l.center;
    p.bound_radius = l.semi_major;
    primitives_.push_back(p);
  }
  // Canes are split into short pieces so their screen bounds stay tight.
  constexpr double kPieceLength = 0.03;
  for (const SceneCane& c : scene_.canes) {
    const double length = (c.end - c.start).norm();
    const Vec3 axis = (c.end - c.start) / length;
    const int pieces = std::max(1, static_cast<int>(std::ceil(length / kPieceLength)));
    for (int i = 0; i < pieces; ++i) {
      Primitive p;
      p.shape = Shape::kCylinder;
      p.surface = c.pale ? SurfaceClass::kPaleCane : SurfaceClass::kCane;
      p.center = c.start + (length * i / pieces) * axis;
      p.b = length / pieces;
      p.normal = axis;
      p.a = c.radius;
      p.bound_center = p.center + 0.5 * p.b * axis;
      p.bound_radius = 0.5 * p.b + c.radius;
      primitives_.push_back(p);
    }
  }
}

RenderedFrame SceneRenderer::render(const Pose3& camera_pose) {
  const std::uint64_t frame = frame_++;
  std::mt19937_64 rng(seed_ * 0x9E3779B97F4A7C15ull ^ (frame + 1) * 0xD1B54A32D192ED03ull);
  const std::size_t color_offset = rng() & kTableMask;
  const std::size_t depth_offset = rng() & kTableMask;
  const std::vector<float>& gauss = *normals_table_;

  const int w = k_.width, h = k_.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  RenderedFrame out;
  out.image = RgbdImage(w, h);
  out.surface.assign(n, static_cast<std::uint8_t>(SurfaceClass::kBackground));
  out.true_depth.assign(n, 0.0f);
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
  std::vector<float> shade(n, 1.0f);

  const Mat3 rt = camera_pose.rotation().transpose();
  const Vec3& origin = camera_pose.position();
  const Vec3& light = options_.light_direction;

  for (const Primitive& world : primitives_) {
    Primitive p = world;
    p.center = rt * (world.center - origin);
    p.normal = rt * world.normal;
    p.major = rt * world.major;
    p.minor = rt * world.minor;
    const Vec3 bc = rt * (world.bound_center - origin);
    const double r = world.bound_radius;

    int u0 = 0, u1 = w - 1, v0 = 0, v1 = h - 1;
    if (bc.z() + r <= 0.0) continue;
    if (bc.z() - r > 1e-3) {
      const double zn = bc.z() - r, zf = bc.z() + r;
      const double xmin = std::min((bc.x() - r) / zn, (bc.x() - r) / zf);
      const double xmax = std::max((bc.x() + r) / zn, (bc.x() + r) / zf);
      const double ymin = std::min((bc.y() - r) / zn, (bc.y() - r) / zf);
      const double ymax = std::max((bc.y() + r) / zn, (bc.y() + r) / zf);
      u0 = std::max(0, static_cast<int>(std::floor(k_.cx + k_.fx * xmin)));
      u1 = std::min(w - 1, static_cast<int>(std::ceil(k_.cx + k_.fx * xmax)));
      v0 = std::max(0, static_cast<int>(std::floor(k_.cy + k_.fy * ymin)));
      v1 = std::min(h - 1, static_cast<int>(std::ceil(k_.cy + k_.fy * ymax)));
      if (u0 > u1 || v0 > v1) continue;
    }

    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Vec3 d = pixel_ray(k_, u, v);  // d.z == 1, so t is the depth
        double t = -1.0;
        Vec3 normal;
        if (p.shape == Shape::kCylinder) {
          const Vec3 wv = -p.center;
          const Vec3 dp = d - d.dot(p.normal) * p.normal;
          const Vec3 wp = wv - wv.dot(p.normal) * p.normal;
          const double qa = dp.squaredNorm();
          if (qa < 1e-18) continue;
          const double qb = 2.0 * wp.dot(dp);
          const double qc = wp.squaredNorm() - p.a * p.a;
          const double disc = qb * qb - 4.0 * qa * qc;
          if (disc < 0.0) continue;
          t = (-qb - std::sqrt(disc)) / (2.0 * qa);
          const Vec3 hit = t * d;
          const double s = (hit - p.center).dot(p.normal);
          if (t <= 0.0 || s < 0.0 || s > p.b) continue;
          normal = (hit - p.center - s * p.normal).normalized();
        } else {
          const double denom = d.dot(p.normal);
          if (std::abs(denom) < 1e-12) continue;
          t = p.center.dot(p.normal) / denom;
          if (t <= 0.0) continue;
          const Vec3 rel = t * d - p.center;
          if (p.shape == Shape::kDisc) {
            if (rel.squaredNorm() > p.a * p.a) continue;
          } else {
            const double x = rel.dot(p.major) / p.a, y = rel.dot(p.minor) / p.b;
            if (x * x + y * y > 1.0) continue;
          }
          normal = p.normal;
        }
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        if (t >= zbuf[i]) continue;
        zbuf[i] = t;
        out.surface[i] = static_cast<std::uint8_t>(p.surface);
        shade[i] = static_cast<float>(0.65 + 0.35 * std::abs(normal.dot(light)));
      }
    }
  }

  std::array<std::array<double, 3>, kSurfaceClassCount> sigmas{};
  for (int s = 0; s < kSurfaceClassCount; ++s)
    for (int c = 0; c < 3; ++c) sigmas[s][c] = std::hypot(scene_.colors[s].sigma[c], noise_.color_sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const ColorDistribution& cd = scene_.colors[out.surface[i]];
    Rgb8& px = out.image.rgb[i];
    std::array<std::uint8_t, 3> ch{};
    for (int c = 0; c < 3; ++c) {
      const double value = cd.mean[c] * shade[i] + sigmas[out.surface[i]][c] * gauss[(color_offset + 3 * i + c) & kTableMask];
      ch[c] = static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0) + 0.5);
    }
    px = {ch[0], ch[1], ch[2]};
    if (out.surface[i] == static_cast<std::uint8_t>(SurfaceClass::kBackground)) continue;
    const double z = zbuf[i];
    out.true_depth[i] = static_cast<float>(z);
    if (z < options_.min_depth || z > options_.max_depth) continue;
    const double noisy = z + noise_.depth_sigma * (z / 0.4) * gauss[(depth_offset + i) & kTableMask];
    out.image.depth[i] = static_cast<float>(std::max(noisy, 1e-4));
  }
  return out;
}

RenderedFrame render_rgbd(const SceneSpec& scene, const Pose3& camera_pose, const CameraIntrinsics& k,
                          const NoiseSpec& noise, std::uint64_t seed) {
  SceneRenderer renderer(scene, k, noise, seed);
  return renderer.render(camera_pose);
}

}  // namespace pollinator
