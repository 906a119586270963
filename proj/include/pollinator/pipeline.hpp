#pragma once

#include "pollinator/config.hpp"
#include "pollinator/flower_map.hpp"
#include "pollinator/occupancy_octree.hpp"
#include "pollinator/perception.hpp"
#include "pollinator/planning.hpp"
#include "pollinator/renderer.hpp"
#include "pollinator/scene.hpp"
#include "pollinator/servoing.hpp"

#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace pollinator {

enum class FsmState {
  kIdle,
  kMapWorkspace,
  kPlanTour,
  kMoveToVantage,
  kRefinePose,
  kServoAlign,
  kServoApproach,
  kPollinate,
  kNextFlower,
  kDone
};
const char* fsm_state_name(FsmState s);

struct FsmEvent {
  int index = 0;
  FsmState state = FsmState::kIdle;
  int track_id = -1;
  std::string detail;
};

/// Simulated sensing for one trial: renders through the true camera pose (nominal
/// pose plus a fixed mounting offset) and reports detections in the nominal frame.
class SensorSimulator {
 public:
  SensorSimulator(const SceneSpec& scene, const PipelineConfig& config, const PerceptionModels& models,
                  std::uint64_t seed);

  struct Frame {
    RenderedFrame rendered;
    std::vector<FlowerDetection> detections;
    std::vector<PositionObservation> observations;  // one per detection
  };

  Frame observe(const Pose3& nominal_camera);
  const Vec3& mounting_offset() const { return mounting_offset_; }
  int frames() const { return frames_; }

 private:
  const SceneSpec& scene_;
  const PipelineConfig& config_;
  const PerceptionModels& models_;
  NoiseSpec noise_;
  SceneRenderer renderer_;
  std::mt19937_64 rng_;
  Vec3 mounting_offset_ = Vec3::Zero();
  int frames_ = 0;
};

struct MappingResult {
  OccupancyOctree octree;
  FlowerMap map;
  int frames = 0;
  int detections = 0;
};

/// Renders at every camera pose, integrates the depth scans and fuses the flower
/// detections into the map.
MappingResult run_mapping_sweep(SensorSimulator& sensor, const std::vector<Pose3>& camera_poses,
                                const PipelineConfig& config);

/// Sweep poses of the configuration around the plant center.
std::vector<Pose3> default_sweep_poses(const PipelineConfig& config);

/// Outcome of one ground-truth flower in a trial.
struct FlowerResult {
  int flower = 0;
  bool reachable = false;
  bool detected = false;
  int track_id = -1;
  bool attempted = false;
  bool touched = false;
  bool pollinated = false;
  double miss_distance = std::numeric_limits<double>::quiet_NaN();  // lateral, at closest contact
  double position_error = std::numeric_limits<double>::quiet_NaN();  // track at servo start
  int servo_steps = 0;
  std::string failure;  // empty on success
};

struct TrialResult {
  int scenario = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int reachable = 0;
  int seen = 0;  // reachable flowers with a confirmed track
  int attempted = 0;
  int touched = 0;
  int pollinated = 0;
  int missed = 0;
  int false_positives = 0;
  std::vector<FlowerResult> flowers;
  std::vector<FsmEvent> events;
  std::vector<ServoTelemetry> servo_trace;  // all servo runs, in visiting order
  std::vector<FlowerMapEntry> flower_map;
};

struct TrialArtifacts {
  OccupancyOctree octree;
  std::vector<FlowerMapEntry> flower_map;
  Tour tour;                  // over `tour_costs`, node 0 is the ready pose
  std::vector<int> tour_ids;  // track id per node, -1 for the ready pose
  CostMatrix tour_costs;
};

/// Joint configuration of the ready pose, solved from a fixed elbow-up seed.
JointVector ready_configuration(const SerialArmModel& arm, const PipelineConfig& config);

/// Copy of `config` whose flower map classifies orientation relative to the layout's
/// reference point.
PipelineConfig with_scene_reference(const PipelineConfig& config);

/// Runs the full autonomous loop on one scene. Per-flower failures are recorded and
/// never abort the trial.
TrialResult run_fsm(const SceneSpec& scene, const PipelineConfig& config, const PerceptionModels& models,
                    std::uint64_t noise_seed, TrialArtifacts* artifacts = nullptr);

/// Lateral distance from the flower axis of the closest trace point lying within
/// `reach` of the flower plane; infinity when no point qualifies.
double contact_lateral_distance(const std::vector<Vec3>& trace, const SceneFlower& flower, double reach);

/// "index,state,track_id,detail"
void write_events_csv(std::ostream& out, const std::vector<FsmEvent>& events);

}  // namespace pollinator
