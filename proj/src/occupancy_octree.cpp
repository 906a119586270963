#include "pollinator/occupancy_octree.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <unordered_set>

namespace pollinator {

namespace {

std::uint64_t pack_key(const OctreeKey& k) {
  return (static_cast<std::uint64_t>(k.x) << 42) | (static_cast<std::uint64_t>(k.y) << 21) | k.z;
}

OctreeKey unpack_key(std::uint64_t v) {
  constexpr std::uint64_t m = (std::uint64_t{1} << 21) - 1;
  return {static_cast<std::uint32_t>(v >> 42), static_cast<std::uint32_t>((v >> 21) & m),
          static_cast<std::uint32_t>(v & m)};
}

}  // namespace

double log_odds_to_probability(double l) { return 1.0 / (1.0 + std::exp(-l)); }

void OctreeParams::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("octree resolution must be positive");
  if (max_depth < 1 || max_depth > 21) throw std::invalid_argument("octree depth must be in [1, 21]");
  if (!(clamp_min < 0.0 && clamp_max > 0.0)) throw std::invalid_argument("octree clamps must bracket zero");
  if (!(hit_log_odds > 0.0 && miss_log_odds < 0.0)) throw std::invalid_argument("bad octree increments");
  if (!(occupancy_threshold > 0.0 && occupancy_threshold < 1.0))
    throw std::invalid_argument("occupancy threshold must be a probability");
}

OccupancyOctree::OccupancyOctree(OctreeParams params) : params_(params) {
  params_.validate();
  threshold_log_odds_ = std::log(params_.occupancy_threshold / (1.0 - params_.occupancy_threshold));
  key_offset_ = std::uint32_t{1} << (params_.max_depth - 1);
  nodes_.emplace_back();  // root
}

std::optional<OctreeKey> OccupancyOctree::key_of(const Vec3& point) const {
  const double limit = static_cast<double>(std::uint32_t{1} << params_.max_depth);
  std::array<std::uint32_t, 3> k{};
  for (int i = 0; i < 3; ++i) {
    const double c = std::floor(point[i] / params_.resolution) + key_offset_;
    if (!(c >= 0.0 && c < limit)) return std::nullopt;
    k[i] = static_cast<std::uint32_t>(c);
  }
  return OctreeKey{k[0], k[1], k[2]};
}

Vec3 OccupancyOctree::center_of(const OctreeKey& key) const {
  const auto c = [&](std::uint32_t v) {
    return (static_cast<double>(v) - static_cast<double>(key_offset_) + 0.5) * params_.resolution;
  };
  return {c(key.x), c(key.y), c(key.z)};
}

int OccupancyOctree::child_index(const OctreeKey& key, int depth) const {
  const int bit = params_.max_depth - 1 - depth;
  return static_cast<int>(((key.x >> bit) & 1u) | (((key.y >> bit) & 1u) << 1) | (((key.z >> bit) & 1u) << 2));
}

void OccupancyOctree::update_leaf(const OctreeKey& key, double delta) {
  std::vector<std::int32_t> path;
  path.reserve(params_.max_depth + 1);
  std::int32_t node = 0;
  for (int depth = 0; depth < params_.max_depth; ++depth) {
    path.push_back(node);
    if (nodes_[node].first_child < 0) {
      const auto first = static_cast<std::int32_t>(nodes_.size());
      nodes_.resize(nodes_.size() + 8);
      nodes_[node].first_child = first;
    }
    node = nodes_[node].first_child + child_index(key, depth);
  }
  Node& leaf = nodes_[node];
  const double base = leaf.known ? leaf.log_odds : 0.0;
  leaf.log_odds = std::clamp(base + delta, params_.clamp_min, params_.clamp_max);
  leaf.known = true;
  refresh_inner(path);
}

void OccupancyOctree::update_leaf(const Vec3& point, double delta) {
  if (const auto key = key_of(point)) update_leaf(*key, delta);
}

void OccupancyOctree::refresh_inner(const std::vector<std::int32_t>& path) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    Node& n = nodes_[*it];
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int c = 0; c < 8; ++c) {
      const Node& child = nodes_[n.first_child + c];
      if (child.known) {
        best = std::max(best, child.log_odds);
        any = true;
      }
    }
    n.known = any;
    n.log_odds = any ? best : 0.0;
  }
}

std::optional<double> OccupancyOctree::query(const Vec3& point, int depth) const {
  const auto key = key_of(point);
  if (!key) return std::nullopt;
  depth = std::clamp(depth, 0, params_.max_depth);
  std::int32_t node = 0;
  for (int d = 0; d < depth; ++d) {
    if (nodes_[node].first_child < 0) return std::nullopt;
    node = nodes_[node].first_child + child_index(*key, d);
  }
  if (!nodes_[node].known) return std::nullopt;
  return nodes_[node].log_odds;
}

std::optional<double> OccupancyOctree::leaf_log_odds(const Vec3& point) const {
  return query(point, params_.max_depth);
}

bool OccupancyOctree::is_occupied(const Vec3& point) const {
  const auto l = leaf_log_odds(point);
  return l && *l > threshold_log_odds_;
}

std::vector<OctreeKey> OccupancyOctree::traverse(const Vec3& origin, const Vec3& endpoint) const {
  std::vector<OctreeKey> out;
  const auto start = key_of(origin);
  const auto end = key_of(endpoint);
  if (!start || !end || *start == *end) return out;

  Vec3 dir = endpoint - origin;
  const double length = dir.norm();
  dir /= length;

  std::array<std::int64_t, 3> current{start->x, start->y, start->z};
  const std::array<std::int64_t, 3> target{end->x, end->y, end->z};
  std::array<int, 3> step{};
  std::array<double, 3> t_max{};
  std::array<double, 3> t_delta{};
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 0.0) {
      step[i] = 1;
    } else if (dir[i] < 0.0) {
      step[i] = -1;
    }
    if (step[i] != 0) {
      const double border =
          (static_cast<double>(current[i]) - key_offset_ + (step[i] > 0 ? 1.0 : 0.0)) * params_.resolution;
      t_max[i] = (border - origin[i]) / dir[i];
      t_delta[i] = params_.resolution / std::abs(dir[i]);
    } else {
      t_max[i] = inf;
      t_delta[i] = inf;
    }
  }

  out.push_back(*start);
  const std::size_t max_steps = static_cast<std::size_t>(3.0 * length / params_.resolution) + 8;
  for (std::size_t n = 0; n < max_steps; ++n) {
    int dim = 0;
    if (t_max[1] < t_max[dim]) dim = 1;
    if (t_max[2] < t_max[dim]) dim = 2;
    if (t_max[dim] > length) break;
    current[dim] += step[dim];
    t_max[dim] += t_delta[dim];
    if (current == target) break;
    out.push_back({static_cast<std::uint32_t>(current[0]), static_cast<std::uint32_t>(current[1]),
                   static_cast<std::uint32_t>(current[2])});
  }
  return out;
}

void OccupancyOctree::insert_ray(const Vec3& origin, const Vec3& endpoint, bool endpoint_is_hit) {
  insert_rays(origin, {Ray{endpoint, endpoint_is_hit}});
}

void OccupancyOctree::insert_rays(const Vec3& origin, const std::vector<Ray>& rays) {
  std::unordered_set<std::uint64_t> free_keys;
  std::unordered_set<std::uint64_t> hit_keys;
  for (const Ray& ray : rays) {
    for (const OctreeKey& k : traverse(origin, ray.endpoint)) free_keys.insert(pack_key(k));
    const auto end = key_of(ray.endpoint);
    if (!end) continue;
    if (ray.hit) {
      hit_keys.insert(pack_key(*end));
    } else {
      free_keys.insert(pack_key(*end));
    }
  }
  std::vector<std::uint64_t> hits(hit_keys.begin(), hit_keys.end());
  std::vector<std::uint64_t> misses;
  misses.reserve(free_keys.size());
  for (auto k : free_keys)
    if (!hit_keys.contains(k)) misses.push_back(k);
  std::sort(hits.begin(), hits.end());
  std::sort(misses.begin(), misses.end());
  for (auto k : hits) update_leaf(unpack_key(k), params_.hit_log_odds);
  for (auto k : misses) update_leaf(unpack_key(k), params_.miss_log_odds);
}

std::size_t OccupancyOctree::leaf_count() const {
  std::size_t n = 0;
  for_each_leaf([&](const Vec3&, double, double) { ++n; });
  return n;
}

void OccupancyOctree::visit_leaves(std::int32_t node, int depth, const OctreeKey& base,
                                   const std::function<void(const Vec3&, double, double)>& fn) const {
  const Node& n = nodes_[node];
  if (!n.known) return;
  if (depth == params_.max_depth) {
    fn(center_of(base), params_.resolution, n.log_odds);
    return;
  }
  const int bit = params_.max_depth - 1 - depth;
  for (int c = 0; c < 8; ++c) {
    const OctreeKey child{base.x | ((c & 1u) << bit), base.y | (((c >> 1) & 1u) << bit),
                          base.z | (((c >> 2) & 1u) << bit)};
    visit_leaves(n.first_child + c, depth + 1, child, fn);
  }
}

void OccupancyOctree::for_each_leaf(const std::function<void(const Vec3&, double, double)>& fn) const {
  visit_leaves(0, 0, OctreeKey{}, fn);
}

bool OccupancyOctree::visit_occupied_node(std::int32_t node, int depth, const OctreeKey& base,
                                          const std::function<bool(const Vec3&, double)>& descend,
                                          const std::function<bool(const Vec3&, double)>& leaf) const {
  const Node& n = nodes_[node];
  if (!n.known || !(n.log_odds > threshold_log_odds_)) return true;
  if (depth == params_.max_depth) return leaf(center_of(base), n.log_odds);

  const int level = params_.max_depth - depth;  // node spans 2^level leaves per axis
  const double half = 0.5 * params_.resolution * static_cast<double>(std::uint32_t{1} << level);
  const Vec3 corner = center_of(base) - Vec3::Constant(0.5 * params_.resolution);
  if (!descend(corner + Vec3::Constant(half), half)) return true;

  const int bit = level - 1;
  for (int c = 0; c < 8; ++c) {
    const OctreeKey child{base.x | ((c & 1u) << bit), base.y | (((c >> 1) & 1u) << bit),
                          base.z | (((c >> 2) & 1u) << bit)};
    if (!visit_occupied_node(n.first_child + c, depth + 1, child, descend, leaf)) return false;
  }
  return true;
}

bool OccupancyOctree::visit_occupied(const std::function<bool(const Vec3&, double)>& descend,
                                     const std::function<bool(const Vec3&, double)>& leaf) const {
  return visit_occupied_node(0, 0, OctreeKey{}, descend, leaf);
}

void OccupancyOctree::write_text(std::ostream& out) const {
  out << std::setprecision(9);
  for_each_leaf([&](const Vec3& c, double size, double l) {
    out << c.x() << ' ' << c.y() << ' ' << c.z() << ' ' << size << ' ' << l << '\n';
  });
}

void insert_depth_scan(OccupancyOctree& map, const Pose3& sensor_pose, const RgbdImage& image,
                       const CameraIntrinsics& k, double max_range, int pixel_stride) {
  if (pixel_stride < 1) throw std::invalid_argument("pixel stride must be >= 1");
  const Vec3 origin = sensor_pose.position();
  std::vector<OccupancyOctree::Ray> rays;
  rays.reserve(static_cast<std::size_t>(image.width / pixel_stride + 1) * (image.height / pixel_stride + 1));
  for (int v = 0; v < image.height; v += pixel_stride) {
    for (int u = 0; u < image.width; u += pixel_stride) {
      const double d = image.depth_at(u, v);
      if (!(d > 0.0)) continue;
      const Vec3 p = sensor_pose.transform_point(back_project({static_cast<double>(u), static_cast<double>(v)}, d, k));
      const Vec3 delta = p - origin;
      const double range = delta.norm();
      if (range > max_range) {
        rays.push_back({origin + delta * (max_range / range), false});
      } else {
        rays.push_back({p, true});
      }
    }
  }
  map.insert_rays(origin, rays);
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool is_region_free(const OccupancyOctree& map, const Vec3& start, const Vec3& end, double radius) {
  const double leaf_half_diag = 0.5 * std::sqrt(3.0) * map.resolution();
  const double reach = radius + leaf_half_diag;
  return map.visit_occupied(
      [&](const Vec3& center, double half) {
        return point_segment_distance(center, start, end) - std::sqrt(3.0) * half <= reach;
      },
      [&](const Vec3& center, double) { return point_segment_distance(center, start, end) > reach; });
}

}  // namespace pollinator
