#include "pollinator/config.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlohmann {

template <>
struct adl_serializer<Eigen::Vector3d> {
  static void to_json(json& j, const Eigen::Vector3d& v) { j = json::array({v.x(), v.y(), v.z()}); }
  static void from_json(const json& j, Eigen::Vector3d& v) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
    v = Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  }
};

template <>
struct adl_serializer<Eigen::Matrix3d> {
  static void to_json(json& j, const Eigen::Matrix3d& m) {
    j = json::array();
    for (int r = 0; r < 3; ++r) j.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  }
  static void from_json(const json& j, Eigen::Matrix3d& m) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3x3 array");
    for (int r = 0; r < 3; ++r) {
      if (!j[r].is_array() || j[r].size() != 3) throw std::invalid_argument("expected a 3x3 array");
      for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
  }
};

}  // namespace nlohmann

namespace pollinator {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CameraIntrinsics, fx, fy, cx, cy, width, height)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SceneLayout, plant_center, plant_half_extent, reach, unreachable_min,
                                                min_flower_spacing, orientation_jitter, pitch_jitter, standoff,
                                                corridor_clearance, sweep_radius)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OctreeParams, resolution, max_depth, hit_log_odds, miss_log_odds,
                                                clamp_min, clamp_max, occupancy_threshold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LmOptions, max_iterations, cost_tolerance, initial_lambda, max_lambda)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AssociationGate, mahalanobis_threshold, new_track_distance)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FlowerMapParams, gate, min_observations, orientation_weight,
                                                orientation_floor, orientation_yaw, lm)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ObservationConfig, sigma, reference_range, match_radius)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PatchOptions, min_area, inflation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DetectionOptions, patches, min_flower_probability, max_range,
                                                reject_border_patches, min_depth_pixels)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VantageOptions, standoff, max_reach, arm_base)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlannerOptions, clearance, step, sample_budget, goal_bias,
                                                shortcut_passes, sampling_margin, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TspOptions, exact_limit, restarts, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ServoParams, parallel_threshold, contact_distance, joint_speed, dt,
                                                condition_threshold, blind_trigger, max_steps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ParallelPlatform, radius, stroke_min, stroke_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PollinationOptions, cycles, samples_per_cycle, extension_amplitude,
                                                tilt_amplitude, kappa)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SweepConfig, radius, azimuths_deg, elevations_deg, pixel_stride,
                                                max_range)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FsmConfig, ready_position, refine_frames, servo_measure_interval,
                                                camera_offset)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScoringConfig, detection_radius, contact_reach, contact_margin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ColorModelOptions, smoothing, uniform_priors)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingOptions, epochs, learning_rate, seed, init_scale)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingSetup, color, lut_bits, patches, classifier)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingConfig, train_images, test_images, seed, noise, setup)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NoiseSpec, depth_sigma, pose_sigma, extrinsic_sigma, color_sigma,
                                                orientation_confusion)

namespace {

json to_json_value(const PipelineConfig& c) {
  json j;
  j["camera"] = c.camera;
  j["arm_file"] = c.arm_file;
  j["layout"] = c.layout;
  j["octree"] = c.octree;
  j["flower_map"] = c.flower_map;
  j["observation"] = c.observation;
  j["detection"] = c.detection;
  j["vantage"] = c.vantage;
  j["planner"] = c.planner;
  j["tsp"] = c.tsp;
  j["servo"] = c.servo;
  j["platform"] = c.platform;
  j["hand_eye_step"] = c.hand_eye_step;
  j["pollination"] = c.pollination;
  j["sweep"] = c.sweep;
  j["fsm"] = c.fsm;
  j["scoring"] = c.scoring;
  j["training"] = c.training;
  j["noise"] = c.noise;
  j["noise_presets"] = json::object();
  for (const auto& [name, spec] : c.noise_presets) j["noise_presets"][name] = spec;
  j["trials_per_scenario"] = json::object();
  for (const auto& [scenario, trials] : c.trials_per_scenario)
    j["trials_per_scenario"][std::to_string(scenario)] = trials;
  j["seed"] = c.seed;
  return j;
}

PipelineConfig from_json_value(const json& j) {
  PipelineConfig c;
  j.at("camera").get_to(c.camera);
  j.at("arm_file").get_to(c.arm_file);
  j.at("layout").get_to(c.layout);
  j.at("octree").get_to(c.octree);
  j.at("flower_map").get_to(c.flower_map);
  j.at("observation").get_to(c.observation);
  j.at("detection").get_to(c.detection);
  j.at("vantage").get_to(c.vantage);
  j.at("planner").get_to(c.planner);
  j.at("tsp").get_to(c.tsp);
  j.at("servo").get_to(c.servo);
  j.at("platform").get_to(c.platform);
  j.at("hand_eye_step").get_to(c.hand_eye_step);
  j.at("pollination").get_to(c.pollination);
  j.at("sweep").get_to(c.sweep);
  j.at("fsm").get_to(c.fsm);
  j.at("scoring").get_to(c.scoring);
  j.at("training").get_to(c.training);
  j.at("noise").get_to(c.noise);
  c.noise_presets.clear();
  for (const auto& [name, spec] : j.at("noise_presets").items()) c.noise_presets[name] = spec.get<NoiseSpec>();
  c.trials_per_scenario.clear();
  for (const auto& [key, trials] : j.at("trials_per_scenario").items())
    c.trials_per_scenario[std::stoi(key)] = trials.get<int>();
  j.at("seed").get_to(c.seed);
  return c;
}

void check_known_keys(const json& user, const json& reference, const std::string& path) {
  if (!user.is_object() || !reference.is_object()) return;
  if (path == "noise_presets" || path == "trials_per_scenario") return;
  for (const auto& [key, value] : user.items()) {
    const std::string child = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw std::invalid_argument("unknown config key '" + child + "'");
    check_known_keys(value, reference.at(key), child);
  }
}

}  // namespace

SerialArmModel PipelineConfig::arm() const {
  return arm_file.empty() ? SerialArmModel::default_arm() : SerialArmModel::load(arm_file);
}

NoiseSpec PipelineConfig::noise_spec() const {
  const auto it = noise_presets.find(noise);
  if (it == noise_presets.end()) throw std::invalid_argument("unknown noise preset '" + noise + "'");
  return it->second;
}

Pose3 PipelineConfig::ready_pose() const {
  return Pose3(fsm.ready_position, look_rotation(Vec3::UnitX(), Vec3(0, 0, -1)));
}

Pose3 PipelineConfig::camera_mount() const { return Pose3(fsm.camera_offset, Eigen::Quaterniond::Identity()); }

void PipelineConfig::validate() const {
  camera.validate();
  octree.validate();
  flower_map.validate();
  servo.validate();
  platform.validate();
  for (const auto& [name, spec] : noise_presets) spec.validate();
  noise_spec();
  if (sweep.azimuths_deg.empty() || sweep.elevations_deg.empty()) throw std::invalid_argument("empty sweep");
  if (sweep.pixel_stride < 1) throw std::invalid_argument("pixel stride must be >= 1");
  if (fsm.servo_measure_interval < 1) throw std::invalid_argument("servo measure interval must be >= 1");
  for (const auto& [scenario, trials] : trials_per_scenario) {
    scenario_template(scenario);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  }
}

std::string config_to_json(const PipelineConfig& config) { return to_json_value(config).dump(2) + "\n"; }

PipelineConfig config_from_json(const std::string& text) {
  const json user = json::parse(text);
  if (!user.is_object()) throw std::invalid_argument("config must be a JSON object");
  json merged = to_json_value(PipelineConfig{});
  check_known_keys(user, merged, "");
  merged.merge_patch(user);
  // A user trial table replaces the default campaign instead of extending it.
  if (user.contains("trials_per_scenario")) merged["trials_per_scenario"] = user["trials_per_scenario"];
  PipelineConfig c = from_json_value(merged);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_to_json(config);
}

}  // namespace pollinator
