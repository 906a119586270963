#include "pollinator/parallel_platform.hpp"

#include "pollinator/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace pollinator {

namespace {

constexpr std::string_view kLutMagic = "PHEL";
constexpr std::uint32_t kLutVersion = 1;

}  // namespace

void ParallelPlatform::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("platform radius must be positive");
  if (!(stroke_min < stroke_max)) throw std::invalid_argument("stroke range must be nonempty");
}

Vec3 ParallelPlatform::actuator_base(int i) const {
  const double angle = 2.0 * std::numbers::pi * i / 3.0;
  return Vec3(radius * std::cos(angle), radius * std::sin(angle), 0.0);
}

bool ParallelPlatform::within_stroke(const PlatformCommand& cmd) const {
  for (double e : cmd)
    if (!(e >= stroke_min && e <= stroke_max)) return false;
  return true;
}

Pose3 platform_forward_pose(const ParallelPlatform& platform, const PlatformCommand& cmd) {
  platform.validate();
  if (!platform.within_stroke(cmd)) throw StrokeError("actuator command outside stroke range");
  std::array<Vec3, 3> tips;
  for (int i = 0; i < 3; ++i) tips[i] = platform.actuator_base(i) + Vec3(0.0, 0.0, cmd[i]);
  const Vec3 centroid = (tips[0] + tips[1] + tips[2]) / 3.0;
  Vec3 normal = (tips[1] - tips[0]).cross(tips[2] - tips[0]).normalized();
  if (normal.z() < 0.0) normal = -normal;
  return Pose3(centroid, Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), normal));
}

double plate_tilt(const Pose3& plate_pose) {
  return std::acos(std::clamp(plate_pose.z_axis().z(), -1.0, 1.0));
}

HandEyeLUT build_ik_lut(const ParallelPlatform& platform, double grid_step) {
  platform.validate();
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const double span = platform.stroke_max - platform.stroke_min;
  const double cells = span / grid_step;
  const long n = std::lround(cells);
  if (std::abs(cells - static_cast<double>(n)) > 1e-9 * std::max(1.0, cells))
    throw std::invalid_argument("grid step must divide the stroke range");

  HandEyeLUT lut;
  lut.step_ = grid_step;
  lut.stroke_min_ = platform.stroke_min;
  lut.stroke_max_ = platform.stroke_max;
  auto level = [&](long i) { return i == n ? platform.stroke_max : platform.stroke_min + grid_step * i; };
  lut.entries_.reserve(static_cast<std::size_t>((n + 1) * (n + 1) * (n + 1)));
  for (long i = 0; i <= n; ++i)
    for (long j = 0; j <= n; ++j)
      for (long k = 0; k <= n; ++k) {
        const PlatformCommand cmd{level(i), level(j), level(k)};
        lut.entries_.push_back({cmd, platform_forward_pose(platform, cmd)});
      }
  return lut;
}

std::size_t query_ik_lut_index(const HandEyeLUT& lut, const Pose3& target, double kappa) {
  if (lut.entries().empty()) throw std::invalid_argument("empty lookup table");
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lut.entries().size(); ++i) {
    const Pose3& p = lut.entries()[i].pose;
    const double cost = (p.position() - target.position()).norm() +
                        kappa * rotation_angle_between(p.orientation(), target.orientation());
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  return best;
}

PlatformCommand query_ik_lut(const HandEyeLUT& lut, const Pose3& target, double kappa) {
  return lut.entries()[query_ik_lut_index(lut, target, kappa)].command;
}

void HandEyeLUT::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  io::write_magic(out, kLutMagic, kLutVersion);
  io::write_le<double>(out, step_);
  io::write_le<double>(out, stroke_min_);
  io::write_le<double>(out, stroke_max_);
  io::write_le<std::uint64_t>(out, entries_.size());
  for (const HandEyeEntry& e : entries_) {
    for (double c : e.command) io::write_le<double>(out, c);
    const Vec3& p = e.pose.position();
    const Eigen::Quaterniond& q = e.pose.orientation();
    for (double v : {p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z()}) io::write_le<double>(out, v);
  }
}

HandEyeLUT HandEyeLUT::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  if (io::read_magic(in, kLutMagic) != kLutVersion) throw io::FormatError("unsupported hand-eye LUT version");
  HandEyeLUT lut;
  lut.step_ = io::read_le<double>(in);
  lut.stroke_min_ = io::read_le<double>(in);
  lut.stroke_max_ = io::read_le<double>(in);
  const auto n = io::read_le<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 32)) throw io::FormatError("implausible entry count");
  lut.entries_.resize(n);
  for (HandEyeEntry& e : lut.entries_) {
    for (double& c : e.command) c = io::read_le<double>(in);
    double v[7];
    for (double& x : v) x = io::read_le<double>(in);
    e.pose = Pose3(Vec3(v[0], v[1], v[2]), Eigen::Quaterniond(v[3], v[4], v[5], v[6]));
  }
  return lut;
}

}  // namespace pollinator
