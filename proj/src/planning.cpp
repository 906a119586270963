#include "pollinator/planning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

namespace pollinator {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool point_free(const OccupancyOctree& map, const Vec3& p, double radius) {
  return is_region_free(map, p, p, radius);
}

std::vector<Vec3> shortcut(std::vector<Vec3> path, const OccupancyOctree& map, double radius, int passes,
                           std::mt19937_64& rng) {
  for (int pass = 0; pass < passes && path.size() > 2; ++pass) {
    std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
    std::size_t i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    if (is_region_free(map, path[i], path[j], radius)) path.erase(path.begin() + i + 1, path.begin() + j);
  }
  return path;
}

}  // namespace

Pose3 vantage_pose(const Pose3& flower, double standoff) {
  const Vec3 normal = flower.z_axis();
  return Pose3(flower.position() + standoff * normal, look_rotation(-normal, Vec3(0, 0, -1)));
}

VantageSet generate_vantage_points(const std::vector<FlowerMapEntry>& flowers, const VantageOptions& options) {
  if (!(options.standoff > 0.0)) throw std::invalid_argument("standoff must be positive");
  VantageSet out;
  for (const FlowerMapEntry& f : flowers) {
    if ((f.pose.position() - options.arm_base).norm() > options.max_reach) {
      out.unreachable_ids.push_back(f.id);
      continue;
    }
    out.vantages.push_back({f.id, vantage_pose(f.pose, options.standoff), f.pose.position()});
  }
  return out;
}

std::vector<Pose3> densify(const std::vector<Vec3>& positions, const Pose3& start, const Pose3& goal, double step) {
  double total = 0.0;
  for (std::size_t i = 1; i < positions.size(); ++i) total += (positions[i] - positions[i - 1]).norm();
  const Eigen::Quaterniond qa = start.orientation();
  const Eigen::Quaterniond qb = goal.orientation();
  auto at = [&](const Vec3& p, double s) {
    const double t = total > 0.0 ? s / total : 1.0;
    return Pose3(p, qa.slerp(t, qb));
  };
  std::vector<Pose3> out;
  out.push_back(Pose3(positions.front(), qa));
  double s = 0.0;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const Vec3& a = positions[i - 1];
    const Vec3& b = positions[i];
    const double len = (b - a).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / step - 1e-12)));
    for (int k = 1; k <= pieces; ++k) {
      const double f = static_cast<double>(k) / pieces;
      const Vec3 p = k == pieces ? b : Vec3(a + f * (b - a));
      out.push_back(at(p, s + f * len));
    }
    s += len;
  }
  out.back() = Pose3(positions.back(), qb);
  return out;
}

PathPolyline plan_point_to_point(const Pose3& start, const Pose3& goal, const OccupancyOctree& map,
                                 const PlannerOptions& options) {
  const Vec3 a = start.position();
  const Vec3 b = goal.position();
  if ((a - b).norm() < 1e-12) throw std::invalid_argument("start and goal coincide");
  const double r = options.clearance;
  if (!point_free(map, b, r)) throw NoPathError("goal is in collision");
  if (!point_free(map, a, r)) throw NoPathError("start is in collision");

  PathPolyline path;
  if (is_region_free(map, a, b, r)) {
    path.waypoints = densify({a, b}, start, goal, options.step);
    path.valid = true;
    return path;
  }

  std::mt19937_64 rng(options.seed);
  const Vec3 lo = a.cwiseMin(b).array() - options.sampling_margin;
  const Vec3 hi = a.cwiseMax(b).array() + options.sampling_margin;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Vec3> nodes{a};
  std::vector<int> parent{-1};
  int goal_node = -1;
  for (int sample = 0; sample < options.sample_budget && goal_node < 0; ++sample) {
    Vec3 target;
    if (unit(rng) < options.goal_bias) {
      target = b;
    } else {
      for (int d = 0; d < 3; ++d) target[d] = lo[d] + unit(rng) * (hi[d] - lo[d]);
    }
    std::size_t nearest = 0;
    double best = kInf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i] - target).squaredNorm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    const Vec3 dir = target - nodes[nearest];
    const double len = dir.norm();
    if (len < 1e-12) continue;
    const Vec3 next = len <= options.step ? target : Vec3(nodes[nearest] + dir * (options.step / len));
    if (!is_region_free(map, nodes[nearest], next, r)) continue;
    nodes.push_back(next);
    parent.push_back(static_cast<int>(nearest));
    if ((next - b).norm() <= options.step && is_region_free(map, next, b, r)) {
      nodes.push_back(b);
      parent.push_back(static_cast<int>(nodes.size()) - 2);
      goal_node = static_cast<int>(nodes.size()) - 1;
    }
  }
  if (goal_node < 0) throw NoPathError("sample budget exhausted");

  std::vector<Vec3> route;
  for (int n = goal_node; n >= 0; n = parent[n]) route.push_back(nodes[n]);
  std::reverse(route.begin(), route.end());
  route = shortcut(std::move(route), map, r, options.shortcut_passes, rng);
  path.waypoints = densify(route, start, goal, options.step);
  path.valid = true;
  return path;
}

double path_cost(const PathPolyline& path) {
  double c = 0.0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i)
    c += (path.waypoints[i].position() - path.waypoints[i - 1].position()).norm();
  return c;
}

CostMatrix build_cost_matrix(const std::vector<Pose3>& poses, const OccupancyOctree& map,
                             const PlannerOptions& options) {
  if (poses.empty()) throw std::invalid_argument("cost matrix needs at least one pose");
  const auto n = static_cast<Eigen::Index>(poses.size());
  CostMatrix c = CostMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((poses[i].position() - poses[j].position()).norm() < 1e-12) continue;
      PlannerOptions o = options;
      o.seed = options.seed * 1000003u + static_cast<std::uint64_t>(i * n + j);
      try {
        c(i, j) = path_cost(plan_point_to_point(poses[i], poses[j], map, o));
      } catch (const NoPathError&) {
        c(i, j) = kInf;
      }
    }
  return c;
}

double tour_cost(const CostMatrix& costs, const std::vector<int>& order) {
  double c = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) c += costs(order[i - 1], order[i]);
  return c;
}

namespace {

void check_tsp_input(const CostMatrix& costs, int start) {
  if (costs.rows() == 0) throw TourError("empty cost matrix");
  if (costs.rows() != costs.cols()) throw TourError("cost matrix must be square");
  if (start < 0 || start >= costs.rows()) throw TourError("start index out of range");
  if (!costs.allFinite()) throw TourError("cost matrix has infinite entries");
}

}  // namespace

Tour solve_tsp_held_karp(const CostMatrix& costs, int start) {
  check_tsp_input(costs, start);
  const int n = static_cast<int>(costs.rows());
  if (n > 20) throw TourError("too many nodes for the exact solver");
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> dp(full * n, kInf);
  std::vector<int> prev(full * n, -1);
  dp[(std::size_t{1} << start) * n + start] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!(mask & (std::size_t{1} << start))) continue;
    for (int last = 0; last < n; ++last) {
      const double base = dp[mask * n + last];
      if (base == kInf) continue;
      for (int next = 0; next < n; ++next) {
        if (mask & (std::size_t{1} << next)) continue;
        const std::size_t m2 = mask | (std::size_t{1} << next);
        const double c = base + costs(last, next);
        if (c < dp[m2 * n + next]) {
          dp[m2 * n + next] = c;
          prev[m2 * n + next] = last;
        }
      }
    }
  }
  const std::size_t all = full - 1;
  int last = start;
  double best = kInf;
  for (int j = 0; j < n; ++j)
    if (dp[all * n + j] < best) {
      best = dp[all * n + j];
      last = j;
    }
  Tour tour;
  std::size_t mask = all;
  for (int v = last; v >= 0;) {
    tour.order.push_back(v);
    const int p = prev[mask * n + v];
    mask &= ~(std::size_t{1} << v);
    v = p;
  }
  std::reverse(tour.order.begin(), tour.order.end());
  tour.cost = tour_cost(costs, tour.order);
  return tour;
}

Tour nearest_neighbor_tour(const CostMatrix& costs, int start) {
  check_tsp_input(costs, start);
  const int n = static_cast<int>(costs.rows());
  std::vector<bool> used(n, false);
  Tour tour;
  tour.order.push_back(start);
  used[start] = true;
  for (int step = 1; step < n; ++step) {
    const int cur = tour.order.back();
    int best = -1;
    for (int j = 0; j < n; ++j)
      if (!used[j] && (best < 0 || costs(cur, j) < costs(cur, best))) best = j;
    used[best] = true;
    tour.order.push_back(best);
  }
  tour.cost = tour_cost(costs, tour.order);
  return tour;
}

Tour two_opt(const CostMatrix& costs, Tour tour) {
  const std::size_t n = tour.order.size();
  tour.cost = tour_cost(costs, tour.order);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 1; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        std::vector<int> candidate = tour.order;
        std::reverse(candidate.begin() + static_cast<std::ptrdiff_t>(i),
                     candidate.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        const double c = tour_cost(costs, candidate);
        if (c < tour.cost - 1e-12) {
          tour.order = std::move(candidate);
          tour.cost = c;
          improved = true;
        }
      }
  }
  return tour;
}

Tour solve_tsp(const CostMatrix& costs, int start, const TspOptions& options) {
  check_tsp_input(costs, start);
  const int n = static_cast<int>(costs.rows());
  if (n <= options.exact_limit) return solve_tsp_held_karp(costs, start);

  Tour best = two_opt(costs, nearest_neighbor_tour(costs, start));
  std::mt19937_64 rng(options.seed);
  for (int r = 0; r < options.restarts; ++r) {
    Tour t;
    t.order.resize(n);
    std::iota(t.order.begin(), t.order.end(), 0);
    std::swap(t.order[0], t.order[start]);
    std::shuffle(t.order.begin() + 1, t.order.end(), rng);
    t = two_opt(costs, std::move(t));
    if (t.cost < best.cost - 1e-12) best = std::move(t);
  }
  return best;
}

ReachableSubset drop_unreachable(const CostMatrix& costs, int start) {
  if (costs.rows() != costs.cols() || start < 0 || start >= costs.rows()) throw TourError("bad cost matrix");
  std::vector<int> kept(costs.rows());
  std::iota(kept.begin(), kept.end(), 0);
  ReachableSubset out;
  for (;;) {
    int worst = -1;
    int worst_count = 0;
    for (int i : kept) {
      if (i == start) continue;
      int count = 0;
      for (int j : kept)
        if (!std::isfinite(costs(i, j)) || !std::isfinite(costs(j, i))) ++count;
      if (count > worst_count) {
        worst_count = count;
        worst = i;
      }
    }
    if (worst < 0) break;
    out.dropped.push_back(worst);
    kept.erase(std::find(kept.begin(), kept.end(), worst));
  }
  std::stable_partition(kept.begin(), kept.end(), [start](int i) { return i == start; });
  out.kept = kept;
  const auto m = static_cast<Eigen::Index>(kept.size());
  out.costs.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out.costs(i, j) = costs(kept[i], kept[j]);
  return out;
}

void write_tour_csv(std::ostream& out, const Tour& tour, const std::vector<int>& ids, const CostMatrix& costs) {
  out << "leg,from_id,to_id,cost\n" << std::setprecision(9);
  for (std::size_t i = 1; i < tour.order.size(); ++i) {
    const int a = tour.order[i - 1], b = tour.order[i];
    out << i - 1 << ',' << ids.at(a) << ',' << ids.at(b) << ',' << costs(a, b) << '\n';
  }
}

void write_path_csv(std::ostream& out, const PathPolyline& path) {
  out << "index,x,y,z\n" << std::setprecision(9);
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
    const Vec3& p = path.waypoints[i].position();
    out << i << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
}

}  // namespace pollinator
