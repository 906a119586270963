#pragma once

#include "pollinator/geometry.hpp"
#include "pollinator/patch_classifier.hpp"
#include "pollinator/segmentation.hpp"

#include <vector>

namespace pollinator {

struct PerceptionModels {
  ColorLut lut;
  LogisticClassifier flower_classifier = LogisticClassifier::zeros(2, kPatchFeatureCount);
};

struct DetectionOptions {
  PatchOptions patches;
  double min_flower_probability = 0.5;
  double max_range = 1.0;
  bool reject_border_patches = true;
  int min_depth_pixels = 20;
};

struct FlowerDetection {
  PatchRegion patch;
  double probability = 0.0;
  double depth = 0.0;  // median valid depth over the patch
  Vec3 camera_point = Vec3::Zero();
  Vec3 world_point = Vec3::Zero();
  double range = 0.0;
};

/// Segment, extract patches, classify them and back-project accepted patches at
/// their centroid and median depth through `camera_pose`.
std::vector<FlowerDetection> detect_flowers(const RgbdImage& image, const Pose3& camera_pose,
                                            const CameraIntrinsics& k, const PerceptionModels& models,
                                            const DetectionOptions& options = {});

/// Median of the valid depths at the patch pixels, 0 when fewer than `min_pixels`.
double patch_median_depth(const PatchRegion& patch, const RgbdImage& image, int min_pixels = 1);

}  // namespace pollinator
