#pragma once

#include "pollinator/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace pollinator {

struct OctreeParams {
  double resolution = 0.01;  // leaf edge, meters
  int max_depth = 16;
  double hit_log_odds = 0.85;
  double miss_log_odds = -0.4;
  double clamp_min = -2.0;
  double clamp_max = 3.5;
  double occupancy_threshold = 0.5;  // probability

  void validate() const;
};

struct OctreeKey {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;
  friend bool operator==(const OctreeKey&, const OctreeKey&) = default;
};

/// Log-odds occupancy octree. Inner nodes hold the maximum log-odds of their known
/// children, so coarse queries are conservative for collision checking.
class OccupancyOctree {
 public:
  explicit OccupancyOctree(OctreeParams params = {});

  const OctreeParams& params() const { return params_; }
  double resolution() const { return params_.resolution; }

  std::optional<OctreeKey> key_of(const Vec3& point) const;
  Vec3 center_of(const OctreeKey& key) const;

  /// Adds `delta` to the leaf's log-odds (unknown leaves start at 0) and clamps.
  void update_leaf(const OctreeKey& key, double delta);
  void update_leaf(const Vec3& point, double delta);

  /// Log-odds of the leaf containing `point`, or nullopt when unobserved.
  std::optional<double> leaf_log_odds(const Vec3& point) const;
  /// Log-odds of the node containing `point` at `depth` (0 = root, max_depth = leaf):
  /// the maximum over its known descendants.
  std::optional<double> query(const Vec3& point, int depth) const;

  bool is_occupied(const Vec3& point) const;
  double threshold_log_odds() const { return threshold_log_odds_; }

  /// Integrates one ray: miss updates on every traversed leaf, a hit on the endpoint
  /// leaf when `endpoint_is_hit`.
  void insert_ray(const Vec3& origin, const Vec3& endpoint, bool endpoint_is_hit = true);

  /// Integrates a batch of rays sharing one origin; each leaf receives at most one
  /// update per batch, and hits take precedence over misses.
  struct Ray {
    Vec3 endpoint;
    bool hit = true;
  };
  void insert_rays(const Vec3& origin, const std::vector<Ray>& rays);

  /// Leaves traversed by the ray from origin to endpoint, excluding the endpoint leaf.
  std::vector<OctreeKey> traverse(const Vec3& origin, const Vec3& endpoint) const;

  std::size_t leaf_count() const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Calls `fn(center, size, log_odds)` for every known leaf.
  void for_each_leaf(const std::function<void(const Vec3&, double, double)>& fn) const;
  /// Walks subtrees whose maximum log-odds exceeds the occupancy threshold.
  /// `descend(center, half_extent)` prunes nodes by their cube; `leaf(center, log_odds)`
  /// is called for occupied leaves and stops the walk by returning false.
  /// Returns false iff the walk was stopped.
  bool visit_occupied(const std::function<bool(const Vec3&, double)>& descend,
                      const std::function<bool(const Vec3&, double)>& leaf) const;

  /// One leaf per line: "x y z size log_odds".
  void write_text(std::ostream& out) const;

 private:
  struct Node {
    double log_odds = 0.0;
    bool known = false;
    std::int32_t first_child = -1;  // index of 8 consecutive children
  };

  int child_index(const OctreeKey& key, int depth) const;
  void refresh_inner(const std::vector<std::int32_t>& path);
  bool visit_occupied_node(std::int32_t node, int depth, const OctreeKey& base,
                           const std::function<bool(const Vec3&, double)>& descend,
                           const std::function<bool(const Vec3&, double)>& leaf) const;
  void visit_leaves(std::int32_t node, int depth, const OctreeKey& base,
                    const std::function<void(const Vec3&, double, double)>& fn) const;

  OctreeParams params_;
  double threshold_log_odds_ = 0.0;
  std::uint32_t key_offset_ = 0;
  std::vector<Node> nodes_;
};

/// Log-odds to probability.
double log_odds_to_probability(double l);

/// Integrates a depth image taken from `sensor_pose` (camera frame convention).
/// Pixels beyond `max_range` carve free space up to max_range only; every
/// `pixel_stride`-th pixel in each direction is used.
void insert_depth_scan(OccupancyOctree& map, const Pose3& sensor_pose, const RgbdImage& image,
                       const CameraIntrinsics& k, double max_range, int pixel_stride = 1);

/// True iff no leaf above the occupancy threshold lies within `radius` (plus the
/// leaf's half diagonal) of the segment. Unknown space counts as free.
bool is_region_free(const OccupancyOctree& map, const Vec3& start, const Vec3& end, double radius);

/// Distance from a point to the segment [a, b].
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

}  // namespace pollinator
