#include "pollinator/flower_map.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>

namespace pollinator {

const char* track_status_name(TrackStatus s) {
  switch (s) {
    case TrackStatus::kCandidate: return "candidate";
    case TrackStatus::kConfirmed: return "confirmed";
    case TrackStatus::kPollinated: return "pollinated";
  }
  return "unknown";
}

void AssociationGate::validate() const {
  if (!(mahalanobis_threshold > 0.0) || !(new_track_distance > 0.0))
    throw std::invalid_argument("association thresholds must be positive");
}

Association associate_observation(const std::vector<FlowerTrack>& tracks, const PositionObservation& obs,
                                  const AssociationGate& gate) {
  gate.validate();
  Association best;
  double best_m = std::numeric_limits<double>::infinity();
  double nearest_euclid = std::numeric_limits<double>::infinity();
  int nearest_index = -1;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const Vec3 d = obs.position - tracks[i].mean;
    const Mat3 s = tracks[i].covariance + obs.covariance;
    const double m = std::sqrt(d.dot(s.ldlt().solve(d)));
    if (m < best_m) {
      best_m = m;
      best.track_index = static_cast<int>(i);
    }
    if (d.norm() < nearest_euclid) {
      nearest_euclid = d.norm();
      nearest_index = static_cast<int>(i);
    }
  }
  best.mahalanobis = best_m;
  if (best.track_index && best_m <= gate.mahalanobis_threshold) return best;
  if (nearest_index >= 0 && nearest_euclid <= gate.new_track_distance) {
    best.track_index = nearest_index;
    const Vec3 d = obs.position - tracks[nearest_index].mean;
    best.mahalanobis = std::sqrt(d.dot((tracks[nearest_index].covariance + obs.covariance).ldlt().solve(d)));
    return best;
  }
  best.track_index.reset();
  return best;
}

ClassDistribution fuse_orientation(const ClassDistribution& belief, const ClassDistribution& obs, double weight,
                                   double floor) {
  if (belief.size() != obs.size()) throw std::invalid_argument("class count mismatch");
  if (!(weight >= 0.0) || !(floor > 0.0)) throw std::invalid_argument("invalid fusion weight or floor");
  Eigen::VectorXd p(belief.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = belief[i] * std::pow(std::max(obs[i], floor), weight);
  const double total = p.sum();
  if (!(total > 0.0)) return ClassDistribution::uniform(static_cast<int>(p.size()));
  return ClassDistribution(p / total);
}

Mat3 range_scaled_covariance(double range, double sigma_at_reference, double reference_range) {
  const double s = sigma_at_reference * std::max(range, 1e-3) / reference_range;
  return Mat3::Identity() * (s * s);
}

ClassDistribution compensate_orientation(const ClassDistribution& observed, double view_yaw, double theta) {
  if (observed.size() != 3) throw std::invalid_argument("orientation distributions have 3 classes");
  if (!(theta > 0.0)) throw std::invalid_argument("orientation yaw must be positive");
  // Position on the yaw axis: 0 = C3 (-theta), 1 = C1, 2 = C2 (+theta).
  constexpr std::array<int, 3> kClassAt{2, 0, 1};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3);
  for (int slot = 0; slot < 3; ++slot) {
    const double s = std::clamp(slot + view_yaw / theta, 0.0, 2.0);
    const int lo = std::min(static_cast<int>(std::floor(s)), 1);
    const double w = s - lo;
    const double mass = observed[kClassAt[slot]];
    out[kClassAt[lo]] += (1.0 - w) * mass;
    out[kClassAt[lo + 1]] += w * mass;
  }
  return ClassDistribution(out);
}

Vec3 rotate_yaw(const Vec3& dir, double yaw) {
  const Vec3 d = Vec3(dir.x(), dir.y(), 0.0).normalized();
  const Vec3 side = d.cross(Vec3::UnitZ());
  return std::cos(yaw) * d + std::sin(yaw) * side;
}

double signed_yaw(const Vec3& from, const Vec3& to) {
  const Vec3 a = Vec3(from.x(), from.y(), 0.0).normalized();
  const Vec3 b(to.x(), to.y(), 0.0);
  return std::atan2(b.dot(a.cross(Vec3::UnitZ())), b.dot(a));
}

Vec3 horizontal_direction(const Vec3& from, const Vec3& to) {
  Vec3 d = to - from;
  d.z() = 0.0;
  if (d.norm() < 1e-12) return Vec3::UnitX();
  return d.normalized();
}

Pose3 flower_pose(const Vec3& position, const Vec3& normal) {
  return Pose3(position, look_rotation(normal.normalized(), Vec3(0, 0, -1)));
}

void FlowerMapParams::validate() const {
  gate.validate();
  if (min_observations < 1) throw std::invalid_argument("min_observations must be >= 1");
  if (!(orientation_floor > 0.0) || !(orientation_weight >= 0.0))
    throw std::invalid_argument("invalid orientation fusion parameters");
}

FlowerMap::FlowerMap(FlowerMapParams params) : params_(std::move(params)) { params_.validate(); }

void FlowerMap::refit(FlowerTrack& track) const {
  static const auto model = std::make_shared<PositionModel>();
  FactorGraph graph;
  const VariableId x = graph.add_variable();
  for (const PositionObservation& o : track.history) graph.add_measurement(x, model, o.position, o.covariance);
  const LmResult result = optimize_tracks(graph, {track.mean}, params_.lm);
  track.mean = result.values[0];
  track.covariance = result.marginal_covariance(x);
}

int FlowerMap::add_observation(const PositionObservation& obs) {
  const Association a = associate_observation(tracks_, obs, params_.gate);
  FlowerTrack* track = nullptr;
  if (!a.track_index) {
    FlowerTrack t;
    t.id = next_id_++;
    t.mean = obs.position;
    t.covariance = obs.covariance;
    t.orientation = ClassDistribution::uniform(static_cast<int>(obs.orientation.size()));
    tracks_.push_back(std::move(t));
    track = &tracks_.back();
  } else {
    track = &tracks_[*a.track_index];
  }
  fuse(*track, obs);
  return track->id;
}

void FlowerMap::add_observation_to(int id, const PositionObservation& obs) {
  for (FlowerTrack& t : tracks_)
    if (t.id == id) return fuse(t, obs);
  throw std::out_of_range("unknown track id");
}

void FlowerMap::fuse(FlowerTrack& track, const PositionObservation& obs) const {
  track.history.push_back(obs);
  track.observations = static_cast<int>(track.history.size());
  refit(track);
  track.orientation =
      fuse_orientation(track.orientation, obs.orientation, params_.orientation_weight, params_.orientation_floor);
  if (track.status == TrackStatus::kCandidate && track.observations >= params_.min_observations)
    track.status = TrackStatus::kConfirmed;
}

void FlowerMap::set_status(int id, TrackStatus status) {
  for (FlowerTrack& t : tracks_)
    if (t.id == id) {
      t.status = status;
      return;
    }
  throw std::out_of_range("unknown track id");
}

const FlowerTrack* FlowerMap::find(int id) const {
  for (const FlowerTrack& t : tracks_)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<FlowerMapEntry> FlowerMap::snapshot() const {
  return flower_map_snapshot(tracks_, params_.reference_point, params_.min_observations, params_.orientation_yaw);
}

Pose3 track_pose(const FlowerTrack& track, const Vec3& reference_point, double orientation_yaw_theta) {
  const Vec3 toward_reference = horizontal_direction(track.mean, reference_point);
  const Vec3 normal = rotate_yaw(toward_reference, orientation_yaw(track.orientation_class(), orientation_yaw_theta));
  return flower_pose(track.mean, normal);
}

std::vector<FlowerMapEntry> flower_map_snapshot(const std::vector<FlowerTrack>& tracks, const Vec3& reference_point,
                                                int min_observations, double orientation_yaw_theta) {
  std::vector<FlowerMapEntry> out;
  for (const FlowerTrack& t : tracks) {
    if (t.observations < min_observations) continue;
    FlowerMapEntry e;
    e.id = t.id;
    e.pose = track_pose(t, reference_point, orientation_yaw_theta);
    e.status = t.status == TrackStatus::kCandidate ? TrackStatus::kConfirmed : t.status;
    e.orientation = t.orientation_class();
    out.push_back(e);
  }
  return out;
}

void write_flower_map_csv(std::ostream& out, const std::vector<FlowerMapEntry>& entries) {
  out << "id,x,y,z,qw,qx,qy,qz,class,status\n";
  out << std::setprecision(9);
  for (const FlowerMapEntry& e : entries) {
    const Vec3& p = e.pose.position();
    const Eigen::Quaterniond& q = e.pose.orientation();
    out << e.id << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << q.w() << ',' << q.x() << ',' << q.y()
        << ',' << q.z() << ',' << orientation_name(e.orientation) << ',' << track_status_name(e.status) << '\n';
  }
}

}  // namespace pollinator
