#pragma once

#include "pollinator/flower_map.hpp"
#include "pollinator/geometry.hpp"
#include "pollinator/occupancy_octree.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace pollinator {

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TourError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VantagePoint {
  int flower_id = 0;
  Pose3 pose;            // end-effector target; local z points at the flower
  Vec3 flower_position = Vec3::Zero();
};

struct VantageOptions {
  double standoff = 0.15;
  double max_reach = 0.7;  // flower distance from the arm base
  Vec3 arm_base = Vec3::Zero();
};

struct VantageSet {
  std::vector<VantagePoint> vantages;
  std::vector<int> unreachable_ids;
};

/// End-effector pose `standoff` in front of a flower along its normal, facing it.
Pose3 vantage_pose(const Pose3& flower, double standoff);

VantageSet generate_vantage_points(const std::vector<FlowerMapEntry>& flowers, const VantageOptions& options = {});

struct PathPolyline {
  std::vector<Pose3> waypoints;
  bool valid = false;
};

struct PlannerOptions {
  double clearance = 0.02;  // capsule radius around the end effector path
  double step = 0.02;
  int sample_budget = 5000;
  double goal_bias = 0.1;
  int shortcut_passes = 50;
  double sampling_margin = 0.3;  // sampling box grows the start-goal box by this much
  std::uint64_t seed = 7;
};

/// Straight segment when its capsule is free, otherwise a goal-biased random tree in
/// position space followed by shortcut smoothing. Orientation is interpolated along
/// the path. Waypoints are spaced at most `step` apart.
PathPolyline plan_point_to_point(const Pose3& start, const Pose3& goal, const OccupancyOctree& map,
                                 const PlannerOptions& options = {});

/// Arc length of the waypoint positions.
double path_cost(const PathPolyline& path);

/// Splits every segment so consecutive waypoints are at most `step` apart.
std::vector<Pose3> densify(const std::vector<Vec3>& positions, const Pose3& start, const Pose3& goal, double step);

using CostMatrix = Eigen::MatrixXd;

/// c(i,j) = path_cost of the planned path from pose i to pose j; infinity when no
/// path is found.
CostMatrix build_cost_matrix(const std::vector<Pose3>& poses, const OccupancyOctree& map,
                             const PlannerOptions& options = {});

struct Tour {
  std::vector<int> order;
  double cost = 0.0;
};

/// Sum of consecutive leg costs (open path).
double tour_cost(const CostMatrix& costs, const std::vector<int>& order);

struct TspOptions {
  int exact_limit = 12;  // Held-Karp up to this many nodes
  int restarts = 4;      // seeded random restarts refined by 2-opt beyond the limit
  std::uint64_t seed = 11;
};

/// Open-path tour starting at `start`. Exact for small N, nearest neighbor + 2-opt
/// otherwise. All entries must be finite.
Tour solve_tsp(const CostMatrix& costs, int start, const TspOptions& options = {});
Tour solve_tsp_held_karp(const CostMatrix& costs, int start);
Tour nearest_neighbor_tour(const CostMatrix& costs, int start);
/// Segment-reversal improvement with `order[0]` fixed; never increases the cost.
Tour two_opt(const CostMatrix& costs, Tour tour);

struct ReachableSubset {
  std::vector<int> kept;     // indices into the original matrix, start first
  std::vector<int> dropped;
  CostMatrix costs;          // restricted to `kept`
};

/// Drops nodes with infinite entries (the most-disconnected first, never `start`)
/// until the remaining matrix is finite.
ReachableSubset drop_unreachable(const CostMatrix& costs, int start);

/// "leg,from_id,to_id,cost"
void write_tour_csv(std::ostream& out, const Tour& tour, const std::vector<int>& ids, const CostMatrix& costs);
/// "index,x,y,z"
void write_path_csv(std::ostream& out, const PathPolyline& path);

}  // namespace pollinator
