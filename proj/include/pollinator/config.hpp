#pragma once

#include "pollinator/arm_kinematics.hpp"
#include "pollinator/factor_graph.hpp"
#include "pollinator/flower_map.hpp"
#include "pollinator/occupancy_octree.hpp"
#include "pollinator/parallel_platform.hpp"
#include "pollinator/perception.hpp"
#include "pollinator/planning.hpp"
#include "pollinator/scene.hpp"
#include "pollinator/servoing.hpp"
#include "pollinator/training.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pollinator {

struct SweepConfig {
  double radius = 0.45;
  std::vector<double> azimuths_deg{-40.0, -20.0, 0.0, 20.0, 40.0};
  std::vector<double> elevations_deg{0.0, 20.0};
  int pixel_stride = 4;      // depth pixels integrated into the octree per direction
  double max_range = 1.0;
};

struct ObservationConfig {
  double sigma = 0.008;            // estimator's position sigma at the reference range
  double reference_range = 0.4;
  double match_radius = 0.03;      // servo re-detections must lie this close to the target
};

struct FsmConfig {
  Vec3 ready_position = Vec3(0.30, 0.0, 0.30);  // tool tip, facing +x
  int refine_frames = 3;
  int servo_measure_interval = 5;  // control steps between re-detections
  Vec3 camera_offset = Vec3(0.0, -0.04, -0.05);  // camera origin in the tool frame
};

struct ScoringConfig {
  double detection_radius = 0.03;  // a confirmed track this close to a flower detects it
  double contact_reach = 0.02;     // trace points farther from the flower plane make no contact
  double contact_margin = 1.5;     // physical contact stops the approach within this many petal radii
};

struct TrainingConfig {
  int train_images = 48;
  int test_images = 16;
  std::uint64_t seed = 2024;
  std::string noise = "default";
  TrainingSetup setup;
};

struct PipelineConfig {
  CameraIntrinsics camera;
  std::string arm_file;  // empty: built-in default arm
  SceneLayout layout;
  OctreeParams octree;
  FlowerMapParams flower_map;
  ObservationConfig observation;
  DetectionOptions detection;
  VantageOptions vantage;
  PlannerOptions planner;
  TspOptions tsp;
  ServoParams servo;
  ParallelPlatform platform;
  double hand_eye_step = 0.001;
  PollinationOptions pollination;
  SweepConfig sweep;
  FsmConfig fsm;
  ScoringConfig scoring;
  TrainingConfig training;
  std::string noise = "default";
  std::map<std::string, NoiseSpec> noise_presets = {
      {"off", NoiseSpec::preset("off")},
      {"low", NoiseSpec::preset("low")},
      {"default", NoiseSpec::preset("default")},
  };
  std::map<int, int> trials_per_scenario = {{1, 5}, {2, 5}, {3, 6}, {4, 6}, {5, 5}, {6, 7}, {7, 7}, {8, 6}};
  std::uint64_t seed = 1;

  SerialArmModel arm() const;
  NoiseSpec noise_spec() const;
  Pose3 ready_pose() const;
  Pose3 camera_mount() const;
  void validate() const;
};

/// JSON text; keys mirror the struct fields. Missing keys keep their defaults and
/// unknown keys are rejected.
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace pollinator
