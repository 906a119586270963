#include "pollinator/pipeline.hpp"

#include "pollinator/planning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <tuple>

namespace pollinator {

const char* fsm_state_name(FsmState s) {
  switch (s) {
    case FsmState::kIdle: return "idle";
    case FsmState::kMapWorkspace: return "map_workspace";
    case FsmState::kPlanTour: return "plan_tour";
    case FsmState::kMoveToVantage: return "move_to_vantage";
    case FsmState::kRefinePose: return "refine_pose";
    case FsmState::kServoAlign: return "servo_align";
    case FsmState::kServoApproach: return "servo_approach";
    case FsmState::kPollinate: return "pollinate";
    case FsmState::kNextFlower: return "next_flower";
    case FsmState::kDone: return "done";
  }
  return "unknown";
}

namespace {

constexpr double kTruthMatchRadius = 0.03;

int nearest_flower(const SceneSpec& scene, const Vec3& p, double radius) {
  int best = -1;
  double best_d = radius;
  for (std::size_t i = 0; i < scene.flowers.size(); ++i) {
    const double d = (scene.flowers[i].position - p).norm();
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

SensorSimulator::SensorSimulator(const SceneSpec& scene, const PipelineConfig& config, const PerceptionModels& models,
                                 std::uint64_t seed)
    : scene_(scene),
      config_(config),
      models_(models),
      noise_(config.noise_spec()),
      renderer_(scene, config.camera, noise_, seed),
      rng_(seed ^ 0x5DEECE66DULL) {
  std::normal_distribution<double> n(0.0, 1.0);
  mounting_offset_ = noise_.extrinsic_sigma * Vec3(n(rng_), n(rng_), n(rng_));
}

SensorSimulator::Frame SensorSimulator::observe(const Pose3& nominal_camera) {
  const Pose3 true_camera = compose_pose(nominal_camera, Pose3(mounting_offset_, Eigen::Quaterniond::Identity()));
  Frame frame;
  frame.rendered = renderer_.render(true_camera);
  ++frames_;
  frame.detections = detect_flowers(frame.rendered.image, nominal_camera, config_.camera, models_, config_.detection);

  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double theta = config_.flower_map.orientation_yaw;
  const Eigen::Matrix3d& confusion = noise_.orientation_confusion;
  for (const FlowerDetection& d : frame.detections) {
    PositionObservation obs;
    const double sigma = noise_.pose_sigma * d.range / config_.observation.reference_range;
    obs.position = d.world_point + sigma * Vec3(n(rng_), n(rng_), n(rng_));
    obs.covariance = range_scaled_covariance(d.range, config_.observation.sigma, config_.observation.reference_range);

    const int truth = nearest_flower(scene_, true_camera.transform_point(d.camera_point), kTruthMatchRadius);
    if (truth >= 0) {
      const SceneFlower& f = scene_.flowers[static_cast<std::size_t>(truth)];
      const Vec3 to_camera = horizontal_direction(f.position, true_camera.position());
      const int true_class = static_cast<int>(orientation_from_yaw(signed_yaw(to_camera, f.normal), theta));
      const double draw = u(rng_);
      int observed = 2;
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        acc += confusion(true_class, j);
        if (draw < acc) {
          observed = j;
          break;
        }
      }
      const Eigen::VectorXd column = confusion.col(observed);
      const ClassDistribution in_view(column / column.sum());
      const Vec3 view_dir = horizontal_direction(obs.position, nominal_camera.position());
      const Vec3 ref_dir = horizontal_direction(obs.position, config_.flower_map.reference_point);
      obs.orientation = compensate_orientation(in_view, signed_yaw(ref_dir, view_dir), theta);
    }
    frame.observations.push_back(std::move(obs));
  }
  return frame;
}

std::vector<Pose3> default_sweep_poses(const PipelineConfig& config) {
  return sweep_camera_poses(config.layout.plant_center, config.sweep.radius, config.sweep.azimuths_deg,
                            config.sweep.elevations_deg);
}

MappingResult run_mapping_sweep(SensorSimulator& sensor, const std::vector<Pose3>& camera_poses,
                                const PipelineConfig& config) {
  if (camera_poses.empty()) throw std::invalid_argument("mapping sweep needs at least one pose");
  MappingResult result{OccupancyOctree(config.octree), FlowerMap(config.flower_map), 0, 0};
  for (const Pose3& pose : camera_poses) {
    const SensorSimulator::Frame frame = sensor.observe(pose);
    insert_depth_scan(result.octree, pose, frame.rendered.image, config.camera, config.sweep.max_range,
                      config.sweep.pixel_stride);
    for (const PositionObservation& obs : frame.observations) result.map.add_observation(obs);
    ++result.frames;
    result.detections += static_cast<int>(frame.observations.size());
  }
  return result;
}

double contact_lateral_distance(const std::vector<Vec3>& trace, const SceneFlower& flower, double reach) {
  double best = std::numeric_limits<double>::infinity();
  const Vec3 n = flower.normal.normalized();
  for (const Vec3& p : trace) {
    const Vec3 d = p - flower.position;
    const double axial = d.dot(n);
    if (std::abs(axial) > reach) continue;
    best = std::min(best, (d - axial * n).norm());
  }
  return best;
}

namespace {

class FsmRunner {
 public:
  FsmRunner(const SceneSpec& scene, const PipelineConfig& config, const PerceptionModels& models,
            std::uint64_t noise_seed)
      : scene_(scene),
        config_(config),
        arm_(config.arm()),
        sensor_(scene, config_, models, noise_seed),
        lut_(build_ik_lut(config.platform, config.hand_eye_step)),
        mount_(config.camera_mount()) {}

  TrialResult run(TrialArtifacts* artifacts);

 private:
  void event(FsmState s, int track = -1, std::string detail = {}) {
    result_.events.push_back({static_cast<int>(result_.events.size()), s, track, std::move(detail)});
  }
  Pose3 camera_at(const JointVector& q) const { return compose_pose(forward_kinematics(arm_, q), mount_); }
  /// Fuses the detection closest to the track into it; false when none matched.
  bool measure(FlowerMap& map, int track_id, const JointVector& q);
  Pose3 target_of(const FlowerMap& map, int track_id) const {
    return track_pose(*map.find(track_id), config_.flower_map.reference_point, config_.flower_map.orientation_yaw);
  }
  void visit(FlowerMap& map, int track_id, const Pose3& vantage, JointVector& q, const JointVector& ready);

  const SceneSpec& scene_;
  const PipelineConfig config_;
  SerialArmModel arm_;
  SensorSimulator sensor_;
  HandEyeLUT lut_;
  Pose3 mount_;
  TrialResult result_;
  std::vector<int> track_to_flower_;  // indexed by track id
};

bool FsmRunner::measure(FlowerMap& map, int track_id, const JointVector& q) {
  const SensorSimulator::Frame frame = sensor_.observe(camera_at(q));
  const Vec3 mean = map.find(track_id)->mean;
  const PositionObservation* best = nullptr;
  double best_d = config_.observation.match_radius;
  for (const PositionObservation& o : frame.observations) {
    const double d = (o.position - mean).norm();
    if (d <= best_d) {
      best_d = d;
      best = &o;
    }
  }
  if (!best) return false;
  map.add_observation_to(track_id, *best);
  return true;
}

void FsmRunner::visit(FlowerMap& map, int track_id, const Pose3& vantage, JointVector& q, const JointVector& ready) {
  const int truth = track_id < static_cast<int>(track_to_flower_.size()) ? track_to_flower_[track_id] : -1;
  FlowerResult* scored = truth >= 0 ? &result_.flowers[static_cast<std::size_t>(truth)] : nullptr;
  auto fail = [&](const std::string& why) {
    if (scored) scored->failure = why;
    event(FsmState::kNextFlower, track_id, why);
  };

  event(FsmState::kMoveToVantage, track_id);
  std::optional<JointVector> qv = inverse_kinematics(arm_, vantage, q);
  if (!qv) qv = inverse_kinematics(arm_, vantage, ready);
  if (!qv) return fail("vantage_ik");
  q = *qv;

  event(FsmState::kRefinePose, track_id);
  int refined = 0;
  for (int i = 0; i < config_.fsm.refine_frames; ++i) refined += measure(map, track_id, q);
  event(FsmState::kRefinePose, track_id, "observations=" + std::to_string(refined));

  Pose3 target = target_of(map, track_id);
  if (scored) scored->position_error = (target.position() - scene_.flowers[static_cast<std::size_t>(truth)].position).norm();

  const ServoParams& sp = config_.servo;
  ServoState state;
  event(FsmState::kServoAlign, track_id);
  bool announced_approach = false;
  bool physical_contact = false;
  while (!state.terminal()) {
    const ServoPhase active = state.phase == ServoPhase::kTranslationOnly ? state.resume : state.phase;
    const bool visual = active == ServoPhase::kParallelAlign || active == ServoPhase::kOrthogonalApproach;
    if (visual && state.step % config_.fsm.servo_measure_interval == 0 && state.step > 0) {
      if (measure(map, track_id, q)) target = target_of(map, track_id);
    }
    const ServoCommand cmd = servo_step(state, arm_, q, target, sp);
    state = cmd.next;
    result_.servo_trace.push_back({state.step, state.phase, state.d_par.norm(), state.d_g.norm(), q});
    const ServoPhase now = state.phase == ServoPhase::kTranslationOnly ? state.resume : state.phase;
    if (!announced_approach && now != ServoPhase::kParallelAlign) {
      announced_approach = true;
      event(FsmState::kServoApproach, track_id);
    }
    if (state.terminal()) break;
    q += cmd.qdot * sp.dt;

    if (truth >= 0) {
      // The approach stops when the tip reaches the face of the real flower.
      const SceneFlower& f = scene_.flowers[static_cast<std::size_t>(truth)];
      const Vec3 d = forward_kinematics(arm_, q).position() - f.position;
      const double axial = d.dot(f.normal);
      if (axial <= 0.0 && (d - axial * f.normal).norm() <= config_.scoring.contact_margin * f.petal_radius) {
        physical_contact = true;
        break;
      }
    }
  }
  if (scored) scored->servo_steps = state.step;
  if (!physical_contact && state.phase == ServoPhase::kFailed) return fail("servo_failed");

  event(FsmState::kPollinate, track_id, physical_contact ? "contact" : "servo_contact");
  const Pose3 tip = forward_kinematics(arm_, q);
  const PollinationTrace trace = pollinate(config_.platform, lut_, target, tip, config_.pollination);
  map.set_status(track_id, TrackStatus::kPollinated);
  if (scored) {
    const SceneFlower& f = scene_.flowers[static_cast<std::size_t>(truth)];
    double r = contact_lateral_distance(trace.contact_points, f, config_.scoring.contact_reach);
    scored->touched = r <= f.petal_radius;
    scored->pollinated = r <= f.anther_radius;
    if (!std::isfinite(r)) r = contact_lateral_distance(trace.contact_points, f, std::numeric_limits<double>::infinity());
    scored->miss_distance = r;
  }
  event(FsmState::kNextFlower, track_id);
}

TrialResult FsmRunner::run(TrialArtifacts* artifacts) {
  result_.scenario = scene_.scenario;
  result_.seed = scene_.seed;
  event(FsmState::kIdle);

  event(FsmState::kMapWorkspace);
  MappingResult mapping = run_mapping_sweep(sensor_, default_sweep_poses(config_), config_);
  FlowerMap& map = mapping.map;
  const std::vector<FlowerMapEntry> seen = map.snapshot();
  event(FsmState::kMapWorkspace, -1,
        "frames=" + std::to_string(mapping.frames) + " tracks=" + std::to_string(seen.size()));

  // Ground-truth bookkeeping: one-to-one nearest matching within the detection radius.
  const std::vector<int> reachable = reachable_flowers(scene_, config_.vantage.max_reach);
  result_.flowers.resize(scene_.flowers.size());
  for (std::size_t i = 0; i < scene_.flowers.size(); ++i) {
    result_.flowers[i].flower = static_cast<int>(i);
    result_.flowers[i].reachable = std::find(reachable.begin(), reachable.end(), static_cast<int>(i)) != reachable.end();
  }
  struct Pair {
    double d;
    int flower;
    int track;
  };
  std::vector<Pair> pairs;
  for (const FlowerMapEntry& e : seen)
    for (std::size_t i = 0; i < scene_.flowers.size(); ++i) {
      const double d = (e.pose.position() - scene_.flowers[i].position).norm();
      if (d <= config_.scoring.detection_radius) pairs.push_back({d, static_cast<int>(i), e.id});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.d, a.flower, a.track) < std::tie(b.d, b.flower, b.track);
  });
  int max_id = -1;
  for (const FlowerTrack& t : map.tracks()) max_id = std::max(max_id, t.id);
  track_to_flower_.assign(static_cast<std::size_t>(max_id + 1), -1);
  for (const Pair& p : pairs) {
    FlowerResult& fr = result_.flowers[static_cast<std::size_t>(p.flower)];
    if (fr.detected || track_to_flower_[static_cast<std::size_t>(p.track)] >= 0) continue;
    fr.detected = true;
    fr.track_id = p.track;
    track_to_flower_[static_cast<std::size_t>(p.track)] = p.flower;
  }
  for (const FlowerMapEntry& e : seen) {
    if ((e.pose.position() - config_.vantage.arm_base).norm() > config_.vantage.max_reach) continue;
    if (nearest_flower(scene_, e.pose.position(), config_.scoring.detection_radius) < 0) ++result_.false_positives;
  }
  for (FlowerResult& fr : result_.flowers)
    if (fr.reachable && fr.detected) {
      fr.attempted = true;
      fr.failure = "not_visited";
    }

  event(FsmState::kPlanTour);
  const VantageSet vantages = generate_vantage_points(seen, config_.vantage);
  const Pose3 ready_pose = config_.ready_pose();
  const JointVector ready = ready_configuration(arm_, config_);

  std::vector<Pose3> nodes{ready_pose};
  std::vector<int> ids{-1};
  for (const VantagePoint& v : vantages.vantages) {
    nodes.push_back(v.pose);
    ids.push_back(v.flower_id);
  }
  const CostMatrix costs = build_cost_matrix(nodes, mapping.octree, config_.planner);
  const ReachableSubset subset = drop_unreachable(costs, 0);
  for (int dropped : subset.dropped) event(FsmState::kPlanTour, ids[static_cast<std::size_t>(dropped)], "no_path");
  const Tour tour = solve_tsp(subset.costs, 0, config_.tsp);
  event(FsmState::kPlanTour, -1, "stops=" + std::to_string(tour.order.size() - 1) + " cost=" + fixed(tour.cost));

  JointVector q = ready;
  for (std::size_t k = 1; k < tour.order.size(); ++k) {
    const int node = subset.kept[static_cast<std::size_t>(tour.order[k])];
    const int track_id = ids[static_cast<std::size_t>(node)];
    const int truth = track_to_flower_[static_cast<std::size_t>(track_id)];
    if (truth >= 0) result_.flowers[static_cast<std::size_t>(truth)].failure.clear();
    visit(map, track_id, nodes[static_cast<std::size_t>(node)], q, ready);
  }
  event(FsmState::kDone);

  for (const FlowerResult& fr : result_.flowers) {
    if (!fr.reachable) continue;
    ++result_.reachable;
    if (!fr.detected) continue;
    ++result_.seen;
    ++result_.attempted;
    result_.touched += fr.touched;
    result_.pollinated += fr.pollinated;
  }
  result_.missed = result_.attempted - result_.touched;
  result_.flower_map = map.snapshot();
  if (artifacts) {
    artifacts->octree = std::move(mapping.octree);
    artifacts->flower_map = result_.flower_map;
    artifacts->tour = tour;
    artifacts->tour_costs = subset.costs;
    artifacts->tour_ids.clear();
    for (int node : subset.kept) artifacts->tour_ids.push_back(ids[static_cast<std::size_t>(node)]);
  }
  return std::move(result_);
}

}  // namespace

JointVector ready_configuration(const SerialArmModel& arm, const PipelineConfig& config) {
  JointVector q0(6);
  q0 << std::numbers::pi, -std::numbers::pi / 2, std::numbers::pi / 2, -std::numbers::pi / 2, -std::numbers::pi / 2, 0;
  if (arm.dof() != 6) q0 = JointVector::Zero(arm.dof());
  IkOptions options;
  options.max_iterations = 1000;
  const std::optional<JointVector> q = inverse_kinematics(arm, config.ready_pose(), q0, options);
  if (!q) throw KinematicsError("ready pose is not reachable");
  return *q;
}

PipelineConfig with_scene_reference(const PipelineConfig& config) {
  PipelineConfig c = config;
  c.flower_map.reference_point = config.layout.reference_point();
  return c;
}

TrialResult run_fsm(const SceneSpec& scene, const PipelineConfig& config, const PerceptionModels& models,
                    std::uint64_t noise_seed, TrialArtifacts* artifacts) {
  config.validate();
  FsmRunner runner(scene, with_scene_reference(config), models, noise_seed);
  return runner.run(artifacts);
}

void write_events_csv(std::ostream& out, const std::vector<FsmEvent>& events) {
  out << "index,state,track_id,detail\n";
  for (const FsmEvent& e : events)
    out << e.index << ',' << fsm_state_name(e.state) << ',' << e.track_id << ',' << e.detail << '\n';
}

}  // namespace pollinator
