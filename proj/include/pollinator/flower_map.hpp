#pragma once

#include "pollinator/factor_graph.hpp"
#include "pollinator/geometry.hpp"
#include "pollinator/patch_classifier.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace pollinator {

enum class TrackStatus { kCandidate, kConfirmed, kPollinated };
const char* track_status_name(TrackStatus s);

struct PositionObservation {
  Vec3 position = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  ClassDistribution orientation = ClassDistribution::uniform(3);
};

struct FlowerTrack {
  int id = 0;
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  ClassDistribution orientation = ClassDistribution::uniform(3);
  int observations = 0;
  TrackStatus status = TrackStatus::kCandidate;
  std::vector<PositionObservation> history;

  OrientationClass orientation_class() const { return static_cast<OrientationClass>(orientation.argmax()); }
};

struct AssociationGate {
  double mahalanobis_threshold = 3.5;
  double new_track_distance = 0.02;  // meters

  void validate() const;
};

struct Association {
  std::optional<int> track_index;  // nullopt: start a new track
  double mahalanobis = 0.0;
};

/// Nearest track by Mahalanobis distance under the combined covariance. An
/// observation beyond the gate only starts a new track when it is also farther than
/// `new_track_distance` from every track; otherwise it joins the nearest one.
Association associate_observation(const std::vector<FlowerTrack>& tracks, const PositionObservation& obs,
                                  const AssociationGate& gate);

/// belief * max(obs, floor)^weight, renormalized.
ClassDistribution fuse_orientation(const ClassDistribution& belief, const ClassDistribution& obs, double weight,
                                   double floor = 1e-3);

/// Isotropic observation covariance whose sigma grows linearly with range.
Mat3 range_scaled_covariance(double range, double sigma_at_reference = 0.008, double reference_range = 0.4);

/// Re-expresses an orientation distribution observed along a horizontal view
/// direction rotated by `view_yaw` from the reference direction. Each class yaw is
/// shifted by `view_yaw` and its mass split linearly between the neighboring classes
/// on the yaw axis (C3, C1, C2), clamped at the ends.
ClassDistribution compensate_orientation(const ClassDistribution& observed, double view_yaw,
                                         double theta = kDefaultOrientationYaw);

/// Horizontal unit vector `dir` rotated about world z by `yaw` (positive turns toward
/// the observer's left when `dir` points at the observer).
Vec3 rotate_yaw(const Vec3& dir, double yaw);
/// Signed yaw from horizontal direction `from` to `to`, in (-pi, pi].
double signed_yaw(const Vec3& from, const Vec3& to);
/// Horizontal unit direction from `from` toward `to`; x axis when degenerate.
Vec3 horizontal_direction(const Vec3& from, const Vec3& to);

/// Frame of a flower: z is the outward face normal, y as close to world down as possible.
Pose3 flower_pose(const Vec3& position, const Vec3& normal);

struct FlowerMapEntry {
  int id = 0;
  Pose3 pose;
  TrackStatus status = TrackStatus::kConfirmed;
  OrientationClass orientation = OrientationClass::kC1;
};

struct FlowerMapParams {
  AssociationGate gate;
  int min_observations = 2;
  double orientation_weight = 1.0;
  double orientation_floor = 0.02;
  double orientation_yaw = kDefaultOrientationYaw;
  /// Orientation classes are relative to the horizontal direction toward this point.
  Vec3 reference_point = Vec3::Zero();
  LmOptions lm;

  void validate() const;
};

/// Persistent flower map. Each track's position is the NLLS fusion of its observations.
class FlowerMap {
 public:
  explicit FlowerMap(FlowerMapParams params = {});

  const FlowerMapParams& params() const { return params_; }
  const std::vector<FlowerTrack>& tracks() const { return tracks_; }

  /// Associates and fuses one observation; returns the track id.
  int add_observation(const PositionObservation& obs);
  /// Fuses one observation into the track `id` without association.
  void add_observation_to(int id, const PositionObservation& obs);
  void set_status(int id, TrackStatus status);
  const FlowerTrack* find(int id) const;

  /// Tracks with at least `min_observations` observations.
  std::vector<FlowerMapEntry> snapshot() const;

 private:
  void refit(FlowerTrack& track) const;
  void fuse(FlowerTrack& track, const PositionObservation& obs) const;

  FlowerMapParams params_;
  std::vector<FlowerTrack> tracks_;
  int next_id_ = 0;
};

/// Pose of one track under the orientation-class yaw mapping.
Pose3 track_pose(const FlowerTrack& track, const Vec3& reference_point, double orientation_yaw);

std::vector<FlowerMapEntry> flower_map_snapshot(const std::vector<FlowerTrack>& tracks, const Vec3& reference_point,
                                                int min_observations, double orientation_yaw = kDefaultOrientationYaw);

/// "id,x,y,z,qw,qx,qy,qz,class,status"
void write_flower_map_csv(std::ostream& out, const std::vector<FlowerMapEntry>& entries);

}  // namespace pollinator
