#include "pollinator/trials.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pollinator {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double percent(int num, int den) {
  return den > 0 ? 100.0 * num / den : std::numeric_limits<double>::quiet_NaN();
}

TrialReport summarize(int scenario, const std::vector<const TrialResult*>& trials) {
  TrialReport r;
  r.scenario = scenario;
  r.trials = static_cast<int>(trials.size());
  int reachable = 0, seen = 0, touched = 0, pollinated = 0, missed = 0;
  for (const TrialResult* t : trials) {
    reachable += t->reachable;
    seen += t->seen;
    r.attempted += t->attempted;
    touched += t->touched;
    pollinated += t->pollinated;
    missed += t->missed;
    r.false_positives += t->false_positives;
  }
  const double n = std::max(r.trials, 1);
  r.reachable = reachable / n;
  r.avg_seen = seen / n;
  r.touched = percent(touched, r.attempted);
  r.pollinated = percent(pollinated, r.attempted);
  r.missed = percent(missed, r.attempted);
  r.detection_accuracy = percent(seen, reachable);
  return r;
}

std::string cell(double v, int digits) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int scenario, int trial) {
  return splitmix64(splitmix64(base) ^ (static_cast<std::uint64_t>(scenario) << 32) ^ static_cast<std::uint64_t>(trial));
}

TrainedModels train_from_config(const PipelineConfig& config) {
  const TrainingConfig& tc = config.training;
  const auto noise = config.noise_presets.find(tc.noise);
  if (noise == config.noise_presets.end()) throw std::invalid_argument("unknown training noise preset '" + tc.noise + "'");
  SyntheticDataOptions data;
  data.noise = noise->second;
  data.camera = config.camera;
  data.layout = config.layout;
  data.images = tc.train_images;
  data.seed = tc.seed;
  const std::vector<LabeledImage> train = synthetic_labeled_images(data);
  data.images = tc.test_images;
  data.seed = splitmix64(tc.seed);
  const std::vector<LabeledImage> test = synthetic_labeled_images(data);
  return train_models(train, test, tc.setup);
}

SceneSpec trial_scene(const PipelineConfig& config, int scenario, std::uint64_t seed) {
  const SerialArmModel arm = config.arm();
  const JointVector ready = ready_configuration(arm, config);
  SceneLayout layout = config.layout;
  layout.reach = std::min(layout.reach, config.vantage.max_reach);
  return generate_scene(scenario_template(scenario), seed, layout, &arm, &ready);
}

TrialResult run_trial(const PipelineConfig& config, const PerceptionModels& models, int scenario, int trial,
                      std::uint64_t seed, TrialArtifacts* artifacts) {
  const SceneSpec scene = trial_scene(config, scenario, seed);
  TrialResult r = run_fsm(scene, config, models, splitmix64(seed ^ 0xA5A5A5A5ULL), artifacts);
  r.trial = trial;
  r.seed = seed;
  return r;
}

std::vector<TrialResult> run_trials(const PipelineConfig& config, const PerceptionModels& models,
                                    const std::map<int, int>& trials_per_scenario) {
  std::vector<TrialResult> out;
  for (const auto& [scenario, trials] : trials_per_scenario) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    for (int t = 0; t < trials; ++t)
      out.push_back(run_trial(config, models, scenario, t, trial_seed(config.seed, scenario, t)));
  }
  return out;
}

std::vector<TrialReport> aggregate_trials(const std::vector<TrialResult>& trials) {
  std::map<int, std::vector<const TrialResult*>> by_scenario;
  std::vector<const TrialResult*> all;
  for (const TrialResult& t : trials) {
    by_scenario[t.scenario].push_back(&t);
    all.push_back(&t);
  }
  std::vector<TrialReport> out;
  for (const auto& [scenario, group] : by_scenario) out.push_back(summarize(scenario, group));
  out.push_back(summarize(0, all));
  return out;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << "scenario,trial,seed,reachable,seen,attempted,touched,pollinated,missed,false_positives\n";
  for (const TrialResult& t : trials)
    out << t.scenario << ',' << t.trial << ',' << t.seed << ',' << t.reachable << ',' << t.seen << ',' << t.attempted
        << ',' << t.touched << ',' << t.pollinated << ',' << t.missed << ',' << t.false_positives << '\n';
}

void write_flowers_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << "scenario,trial,flower,reachable,detected,track_id,attempted,touched,pollinated,miss_distance,"
         "position_error,servo_steps,failure\n";
  for (const TrialResult& t : trials)
    for (const FlowerResult& f : t.flowers)
      out << t.scenario << ',' << t.trial << ',' << f.flower << ',' << f.reachable << ',' << f.detected << ','
          << f.track_id << ',' << f.attempted << ',' << f.touched << ',' << f.pollinated << ','
          << cell(f.miss_distance, 6) << ',' << cell(f.position_error, 6) << ',' << f.servo_steps << ','
          << f.failure << '\n';
}

void write_report_csv(std::ostream& out, const std::vector<TrialReport>& reports) {
  out << "scenario,trials,reachable,avg_seen,touched_pct,pollinated_pct,missed_pct,detection_accuracy_pct,"
         "false_positives,attempted\n";
  for (const TrialReport& r : reports)
    out << (r.scenario == 0 ? std::string("all") : std::to_string(r.scenario)) << ',' << r.trials << ','
        << cell(r.reachable, 6) << ',' << cell(r.avg_seen, 6) << ',' << cell(r.touched, 6) << ','
        << cell(r.pollinated, 6) << ',' << cell(r.missed, 6) << ',' << cell(r.detection_accuracy, 6) << ','
        << r.false_positives << ',' << r.attempted << '\n';
}

void write_report_table(std::ostream& out, const std::vector<TrialReport>& reports) {
  auto row = [&](const std::string& label, auto value) {
    out << std::left << std::setw(22) << label;
    for (const TrialReport& r : reports) out << std::right << std::setw(9) << value(r);
    out << '\n';
  };
  row("Scenario", [](const TrialReport& r) { return r.scenario == 0 ? std::string("All") : std::to_string(r.scenario); });
  row("# Trials", [](const TrialReport& r) { return std::to_string(r.trials); });
  row("# Reachable", [](const TrialReport& r) { return cell(r.reachable, 1); });
  row("# Avg. Seen", [](const TrialReport& r) { return cell(r.avg_seen, 1); });
  row("% Touched", [](const TrialReport& r) { return cell(r.touched, 1); });
  row("% Pollinated", [](const TrialReport& r) { return cell(r.pollinated, 1); });
  row("% Missed", [](const TrialReport& r) { return cell(r.missed, 1); });
  row("% Detection", [](const TrialReport& r) { return cell(r.detection_accuracy, 1); });
  row("# False positives", [](const TrialReport& r) { return std::to_string(r.false_positives); });
}

std::vector<TrialResult> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("scenario,trial,seed", 0) != 0)
    throw std::runtime_error("not a per-trial CSV");
  std::vector<TrialResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 10) throw std::runtime_error("malformed per-trial row: " + line);
    TrialResult t;
    t.scenario = std::stoi(f[0]);
    t.trial = std::stoi(f[1]);
    t.seed = std::stoull(f[2]);
    t.reachable = std::stoi(f[3]);
    t.seen = std::stoi(f[4]);
    t.attempted = std::stoi(f[5]);
    t.touched = std::stoi(f[6]);
    t.pollinated = std::stoi(f[7]);
    t.missed = std::stoi(f[8]);
    t.false_positives = std::stoi(f[9]);
    out.push_back(std::move(t));
  }
  return out;
}

double failures_within(const std::vector<TrialResult>& trials, double limit) {
  int failures = 0, within = 0;
  for (const TrialResult& t : trials)
    for (const FlowerResult& f : t.flowers) {
      if (!f.attempted || f.pollinated) continue;
      ++failures;
      within += std::isfinite(f.miss_distance) && f.miss_distance <= limit;
    }
  return failures == 0 ? 1.0 : static_cast<double>(within) / failures;
}

}  // namespace pollinator
