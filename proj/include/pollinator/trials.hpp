#pragma once

#include "pollinator/config.hpp"
#include "pollinator/pipeline.hpp"
#include "pollinator/training.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

namespace pollinator {

/// Aggregate over the trials of one scenario, or over all trials when scenario is 0.
/// Percentages are over attempted flowers (reachable flowers that were seen).
struct TrialReport {
  int scenario = 0;
  int trials = 0;
  double reachable = 0.0;  // mean per trial
  double avg_seen = 0.0;
  double touched = 0.0;     // percent
  double pollinated = 0.0;  // percent
  double missed = 0.0;      // percent
  double detection_accuracy = 0.0;  // percent of reachable flowers seen
  int false_positives = 0;
  int attempted = 0;
};

/// Seed of trial `trial` of `scenario` in a campaign seeded with `base`.
std::uint64_t trial_seed(std::uint64_t base, int scenario, int trial);

/// Synthetic training images and models from the training section of the config.
TrainedModels train_from_config(const PipelineConfig& config);

/// Scene of one trial: the scenario template placed with the trial seed.
SceneSpec trial_scene(const PipelineConfig& config, int scenario, std::uint64_t seed);

/// One trial of a scenario, scene and noise both derived from `seed`.
TrialResult run_trial(const PipelineConfig& config, const PerceptionModels& models, int scenario, int trial,
                      std::uint64_t seed, TrialArtifacts* artifacts = nullptr);

/// Independent seeded trials, ordered by scenario then trial.
std::vector<TrialResult> run_trials(const PipelineConfig& config, const PerceptionModels& models,
                                    const std::map<int, int>& trials_per_scenario);

/// One report per scenario in ascending order, then the overall report (scenario 0).
std::vector<TrialReport> aggregate_trials(const std::vector<TrialResult>& trials);

/// "scenario,trial,seed,reachable,seen,attempted,touched,pollinated,missed,false_positives"
void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials);
/// One row per ground-truth flower of every trial.
void write_flowers_csv(std::ostream& out, const std::vector<TrialResult>& trials);
/// "scenario,trials,reachable,avg_seen,touched_pct,pollinated_pct,missed_pct,detection_accuracy_pct,
/// false_positives,attempted"; the overall row has scenario "all".
void write_report_csv(std::ostream& out, const std::vector<TrialReport>& reports);
/// Plain-text table laid out with one column per scenario.
void write_report_table(std::ostream& out, const std::vector<TrialReport>& reports);

/// Reads back a per-trial CSV written by write_trials_csv.
std::vector<TrialResult> read_trials_csv(std::istream& in);

/// Fraction of failed attempts (attempted and not pollinated) whose miss distance is at
/// most `limit`; failures without a contact trace count as exceeding it. 1 when there
/// are no failures.
double failures_within(const std::vector<TrialResult>& trials, double limit);

}  // namespace pollinator
