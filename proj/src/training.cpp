#include "pollinator/training.hpp"

#include "pollinator/renderer.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace pollinator {

std::vector<LabeledImage> synthetic_labeled_images(const SyntheticDataOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  const std::vector<int> scenarios = bench_scenarios();

  std::vector<LabeledImage> out;
  out.reserve(options.images);
  for (int i = 0; i < options.images; ++i) {
    const int scenario = scenarios[static_cast<std::size_t>(i) % scenarios.size()];
    const SceneSpec scene = generate_scene(scenario_template(scenario), rng(), options.layout);
    Pose3 camera;
    if (unit01(rng) < options.close_view_fraction && !scene.flowers.empty()) {
      const SceneFlower& f = scene.flowers[rng() % scene.flowers.size()];
      const double distance = 0.12 + 0.2 * unit01(rng);
      const Vec3 dir = (f.normal + 0.35 * Vec3(unit(rng), unit(rng), unit(rng))).normalized();
      const Vec3 eye = f.position + distance * dir;
      const Vec3 target = f.position + 0.03 * Vec3(unit(rng), unit(rng), unit(rng));
      camera = Pose3(eye, look_rotation(target - eye, Vec3(0, 0, -1)));
    } else {
      const double az = 40.0 * unit(rng) * std::numbers::pi / 180.0;
      const double el = 25.0 * unit01(rng) * std::numbers::pi / 180.0;
      const double radius = options.layout.sweep_radius * (0.8 + 0.3 * unit01(rng));
      const Vec3& c = options.layout.plant_center;
      const Vec3 eye = c + radius * Vec3(-std::cos(el) * std::cos(az), -std::cos(el) * std::sin(az), std::sin(el));
      camera = Pose3(eye, look_rotation(c - eye, Vec3(0, 0, -1)));
    }
    SceneRenderer renderer(scene, options.camera, options.noise, rng());
    const RenderedFrame frame = renderer.render(camera);
    LabeledImage labeled;
    labeled.image = frame.image;
    labeled.labels = BinaryMask(frame.image.width, frame.image.height);
    for (int v = 0; v < frame.image.height; ++v)
      for (int u = 0; u < frame.image.width; ++u)
        if (frame.is_flower(u, v)) labeled.labels.set(u, v, 1);
    out.push_back(std::move(labeled));
  }
  return out;
}

std::vector<TrainingSample> patch_samples(std::span<const LabeledImage> images, const ColorLut& lut,
                                          const PatchOptions& patches, double flower_fraction) {
  std::vector<TrainingSample> out;
  for (const LabeledImage& li : images) {
    const BinaryMask mask = segment_image(lut, li.image);
    for (const PatchRegion& patch : extract_patches(mask, patches)) {
      std::size_t flower = 0;
      for (const auto& [u, v] : patch.pixels) flower += li.labels.at(u, v) != 0;
      const bool is_flower = static_cast<double>(flower) >= flower_fraction * static_cast<double>(patch.pixels.size());
      out.push_back({patch_features(patch, li.image), is_flower ? 1 : 0});
    }
  }
  return out;
}

TrainedModels train_models(std::span<const LabeledImage> train, std::span<const LabeledImage> test,
                           const TrainingSetup& setup) {
  ColorHistogramModel color = train_color_model(train, setup.color);
  PerceptionModels perception;
  perception.lut = ColorLut::build(color, setup.lut_bits);
  const std::vector<TrainingSample> samples = patch_samples(train, perception.lut, setup.patches);
  if (samples.empty()) throw ClassifierError("segmentation produced no training patches");
  std::vector<double> history;
  perception.flower_classifier = train_reference_classifier(samples, 2, setup.classifier, &history);

  std::vector<Prediction> predictions;
  const std::vector<TrainingSample> held_out = patch_samples(test, perception.lut, setup.patches);
  for (const TrainingSample& s : held_out)
    predictions.push_back({perception.flower_classifier.classify(s.features).argmax(), s.label});
  ClassificationMetrics metrics;
  if (!predictions.empty()) metrics = compute_metrics(predictions, 2);
  return {std::move(color), std::move(perception), std::move(history), std::move(metrics)};
}

void save_models(const TrainedModels& models, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  models.color.save(dir / "color_model.bin");
  models.perception.lut.save(dir / "color_lut.bin");
  models.perception.flower_classifier.save(dir / "flower_classifier.bin");
}

PerceptionModels load_perception_models(const std::filesystem::path& dir) {
  PerceptionModels m;
  m.lut = ColorLut::load(dir / "color_lut.bin");
  m.flower_classifier = LogisticClassifier::load(dir / "flower_classifier.bin");
  return m;
}

}  // namespace pollinator
