#pragma once

#include "pollinator/patch_classifier.hpp"
#include "pollinator/perception.hpp"
#include "pollinator/scene.hpp"
#include "pollinator/segmentation.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pollinator {

struct SyntheticDataOptions {
  int images = 48;
  std::uint64_t seed = 2024;
  NoiseSpec noise = NoiseSpec::preset("default");
  CameraIntrinsics camera;
  SceneLayout layout;
  double close_view_fraction = 0.5;  // share of views taken near a flower
};

/// Rendered scenes with their ground-truth flower masks, from plant-wide and close views.
std::vector<LabeledImage> synthetic_labeled_images(const SyntheticDataOptions& options);

/// Patches found by the LUT segmentation, labeled flower (1) when at least
/// `flower_fraction` of their pixels are flower in the ground-truth mask.
std::vector<TrainingSample> patch_samples(std::span<const LabeledImage> images, const ColorLut& lut,
                                          const PatchOptions& patches = {}, double flower_fraction = 0.5);

struct TrainingSetup {
  ColorModelOptions color;
  int lut_bits = 8;
  PatchOptions patches;
  TrainingOptions classifier;
};

struct TrainedModels {
  ColorHistogramModel color;
  PerceptionModels perception;
  std::vector<double> loss_history;
  ClassificationMetrics patch_metrics;  // on the held-out images
};

TrainedModels train_models(std::span<const LabeledImage> train, std::span<const LabeledImage> test,
                           const TrainingSetup& setup = {});

/// Writes color_model.bin, color_lut.bin and flower_classifier.bin into `dir`.
void save_models(const TrainedModels& models, const std::filesystem::path& dir);
/// Reads the LUT and flower classifier written by save_models.
PerceptionModels load_perception_models(const std::filesystem::path& dir);

}  // namespace pollinator
