#include "pollinator/config.hpp"
#include "pollinator/image_io.hpp"
#include "pollinator/pipeline.hpp"
#include "pollinator/trials.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace pollinator;

namespace {

struct CommonOptions {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> noise;
  std::string out = "out";
  std::string models;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_noise = true) {
  cmd->add_option("--config", o.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Campaign seed");
  if (with_noise) cmd->add_option("--noise", o.noise, "Noise preset")->check(CLI::IsMember({"off", "low", "default"}));
  cmd->add_option("--out", o.out, "Output directory");
}

PipelineConfig load(const CommonOptions& o) {
  PipelineConfig c = o.config_file.empty() ? PipelineConfig{} : load_config(o.config_file);
  if (o.seed) c.seed = *o.seed;
  if (o.noise) c.noise = *o.noise;
  c.validate();
  return c;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

PerceptionModels models_for(const CommonOptions& o, const PipelineConfig& c) {
  if (!o.models.empty()) return load_perception_models(o.models);
  std::cerr << "training perception models on synthetic images\n";
  return train_from_config(c).perception;
}

void write_metrics(const fs::path& dir, const TrainedModels& m) {
  const std::vector<std::string> names{"background", "flower"};
  auto table = open_out(dir, "metrics.txt");
  m.patch_metrics.write_table(table, names);
  auto csv = open_out(dir, "metrics.csv");
  m.patch_metrics.write_csv(csv, names);
  auto loss = open_out(dir, "loss.csv");
  loss << "epoch,loss\n";
  for (std::size_t i = 0; i < m.loss_history.size(); ++i) loss << i << ',' << m.loss_history[i] << '\n';
}

int cmd_config(const CommonOptions& o) {
  const PipelineConfig c = load(o);
  auto out = open_out(o.out, "config.json");
  out << config_to_json(c);
  std::cout << (fs::path(o.out) / "config.json").string() << '\n';
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& data, const std::string& test) {
  PipelineConfig c = load(o);
  if (o.seed) c.training.seed = *o.seed;
  if (o.noise) c.training.noise = *o.noise;
  auto train_on_directory = [&] {
    const std::vector<LabeledImage> train = io::load_labeled_directory(data);
    if (train.empty()) throw std::runtime_error("no labeled images in " + data);
    const std::vector<LabeledImage> held_out =
        test.empty() ? std::vector<LabeledImage>{} : io::load_labeled_directory(test);
    return train_models(train, held_out, c.training.setup);
  };
  const TrainedModels m = data.empty() ? train_from_config(c) : train_on_directory();
  save_models(m, o.out);
  write_metrics(o.out, m);
  const std::vector<std::string> names{"background", "flower"};
  m.patch_metrics.write_table(std::cout, names);
  return 0;
}

int cmd_lut(const CommonOptions& o, int bits) {
  PipelineConfig c = load(o);
  ColorHistogramModel color = o.models.empty() ? train_from_config(c).color
                                               : ColorHistogramModel::load(fs::path(o.models) / "color_model.bin");
  const auto t0 = std::chrono::steady_clock::now();
  const ColorLut lut = ColorLut::build(color, bits);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(o.out);
  lut.save(fs::path(o.out) / "color_lut.bin");
  std::cout << "entries " << lut.size() << "\nflower_entries " << lut.flower_entries() << "\nbuild_seconds " << seconds
            << '\n';
  return 0;
}

int cmd_map(const CommonOptions& o, int scenario, int trial) {
  const PipelineConfig base = load(o);
  const PipelineConfig c = with_scene_reference(base);
  const PerceptionModels models = models_for(o, c);
  const std::uint64_t seed = trial_seed(c.seed, scenario, trial);
  const SceneSpec scene = trial_scene(c, scenario, seed);
  SensorSimulator sensor(scene, c, models, seed);
  const MappingResult mapping = run_mapping_sweep(sensor, default_sweep_poses(c), c);
  auto octree = open_out(o.out, "octree.txt");
  mapping.octree.write_text(octree);
  auto flowers = open_out(o.out, "flower_map.csv");
  write_flower_map_csv(flowers, mapping.map.snapshot());
  std::cout << "frames " << mapping.frames << "\ndetections " << mapping.detections << "\nconfirmed_tracks "
            << mapping.map.snapshot().size() << "\noctree_leaves " << mapping.octree.leaf_count() << '\n';
  return 0;
}

int cmd_run(const CommonOptions& o, int scenario, int trial) {
  const PipelineConfig c = load(o);
  const PerceptionModels models = models_for(o, c);
  TrialArtifacts artifacts;
  const TrialResult r = run_trial(c, models, scenario, trial, trial_seed(c.seed, scenario, trial), &artifacts);
  const std::vector<TrialResult> trials{r};
  auto events = open_out(o.out, "events.csv");
  write_events_csv(events, r.events);
  auto servo = open_out(o.out, "servo_trace.csv");
  write_servo_trace_csv(servo, r.servo_trace);
  auto flowers = open_out(o.out, "flowers.csv");
  write_flowers_csv(flowers, trials);
  auto trial_csv = open_out(o.out, "trials.csv");
  write_trials_csv(trial_csv, trials);
  auto map = open_out(o.out, "flower_map.csv");
  write_flower_map_csv(map, artifacts.flower_map);
  auto octree = open_out(o.out, "octree.txt");
  artifacts.octree.write_text(octree);
  auto tour = open_out(o.out, "tour.csv");
  write_tour_csv(tour, artifacts.tour, artifacts.tour_ids, artifacts.tour_costs);
  const std::vector<TrialReport> reports = aggregate_trials(trials);
  auto report = open_out(o.out, "report.csv");
  write_report_csv(report, reports);
  write_report_table(std::cout, reports);
  return 0;
}

void write_campaign(const fs::path& dir, const std::vector<TrialResult>& trials) {
  const std::vector<TrialReport> reports = aggregate_trials(trials);
  auto trials_csv = open_out(dir, "trials.csv");
  write_trials_csv(trials_csv, trials);
  auto flowers = open_out(dir, "flowers.csv");
  write_flowers_csv(flowers, trials);
  auto report = open_out(dir, "report.csv");
  write_report_csv(report, reports);
  auto table = open_out(dir, "report.txt");
  write_report_table(table, reports);
  write_report_table(std::cout, reports);
}

int cmd_bench(const CommonOptions& o, std::optional<int> scenario, std::optional<int> trials) {
  const PipelineConfig c = load(o);
  std::map<int, int> plan = c.trials_per_scenario;
  if (scenario) plan = {{*scenario, plan.count(*scenario) ? plan.at(*scenario) : 1}};
  if (trials)
    for (auto& [s, n] : plan) n = *trials;
  const PerceptionModels models = models_for(o, c);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<TrialResult> results = run_trials(c, models, plan);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_campaign(o.out, results);
  std::cout << "failures_within_2cm " << failures_within(results, 0.02) << "\ntrial_seconds " << seconds << '\n';
  return 0;
}

int cmd_report(const CommonOptions& o, const std::string& input) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open " + input);
  const std::vector<TrialReport> reports = aggregate_trials(read_trials_csv(in));
  auto report = open_out(o.out, "report.csv");
  write_report_csv(report, reports);
  auto table = open_out(o.out, "report.txt");
  write_report_table(table, reports);
  write_report_table(std::cout, reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robotic precision pollination simulator"};
  app.require_subcommand(1);
  CommonOptions o;
  int scenario = 1;
  int trial = 0;
  std::optional<int> bench_scenario;
  std::optional<int> bench_trials;
  int bits = 8;
  std::string data, test, input;

  CLI::App* config = app.add_subcommand("config", "Write the effective configuration as JSON");
  add_common(config, o);

  CLI::App* train = app.add_subcommand("train", "Train the color model and patch classifier");
  add_common(train, o);
  train->add_option("--data", data, "Labeled image directory (default: synthetic images)")->check(CLI::ExistingDirectory);
  train->add_option("--test", test, "Held-out labeled image directory")->check(CLI::ExistingDirectory);

  CLI::App* lut = app.add_subcommand("lut", "Build the color lookup table and report its size and build time");
  add_common(lut, o);
  lut->add_option("--models", o.models, "Directory with color_model.bin");
  lut->add_option("--bits", bits, "Bits per channel")->check(CLI::Range(1, 8));

  CLI::App* map = app.add_subcommand("map", "Run the mapping sweep and export the octree and flower map");
  add_common(map, o);
  map->add_option("--scenario", scenario, "Scenario 0-8")->check(CLI::Range(0, 8));
  map->add_option("--trial", trial, "Trial index within the scenario");
  map->add_option("--models", o.models, "Directory with trained models");

  CLI::App* run = app.add_subcommand("run", "Run one trial with telemetry");
  add_common(run, o);
  run->add_option("--scenario", scenario, "Scenario 0-8")->check(CLI::Range(0, 8));
  run->add_option("--trial", trial, "Trial index within the scenario");
  run->add_option("--models", o.models, "Directory with trained models");

  CLI::App* bench = app.add_subcommand("bench", "Run the full campaign and write the report");
  add_common(bench, o);
  bench->add_option("--scenario", bench_scenario, "Only this scenario")->check(CLI::Range(0, 8));
  bench->add_option("--trials", bench_trials, "Trials per scenario (default: per-scenario counts)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--models", o.models, "Directory with trained models");

  CLI::App* report = app.add_subcommand("report", "Aggregate a per-trial CSV into the report");
  add_common(report, o, false);
  report->add_option("--in", input, "Per-trial CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (config->parsed()) return cmd_config(o);
    if (train->parsed()) return cmd_train(o, data, test);
    if (lut->parsed()) return cmd_lut(o, bits);
    if (map->parsed()) return cmd_map(o, scenario, trial);
    if (run->parsed()) return cmd_run(o, scenario, trial);
    if (bench->parsed()) return cmd_bench(o, bench_scenario, bench_trials);
    if (report->parsed()) return cmd_report(o, input);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
