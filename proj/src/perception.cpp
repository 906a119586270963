#include "pollinator/perception.hpp"

#include <algorithm>

namespace pollinator {

double patch_median_depth(const PatchRegion& patch, const RgbdImage& image, int min_pixels) {
  std::vector<float> depths;
  depths.reserve(patch.pixels.size());
  for (const auto& [u, v] : patch.pixels) {
    const float d = image.depth_at(u, v);
    if (d > 0.0f) depths.push_back(d);
  }
  if (depths.empty() || static_cast<int>(depths.size()) < min_pixels) return 0.0;
  const auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
  std::nth_element(depths.begin(), mid, depths.end());
  return *mid;
}

std::vector<FlowerDetection> detect_flowers(const RgbdImage& image, const Pose3& camera_pose,
                                            const CameraIntrinsics& k, const PerceptionModels& models,
                                            const DetectionOptions& options) {
  const BinaryMask mask = segment_image(models.lut, image);
  std::vector<FlowerDetection> out;
  for (PatchRegion& patch : extract_patches(mask, options.patches)) {
    if (options.reject_border_patches && patch.touches_border(image.width, image.height)) continue;
    const PatchDecision decision = classify_patch(models.flower_classifier, patch, image);
    if (!decision.is_flower || decision.probability < options.min_flower_probability) continue;
    const double depth = patch_median_depth(patch, image, options.min_depth_pixels);
    if (!(depth > 0.0)) continue;
    FlowerDetection d;
    d.probability = decision.probability;
    d.depth = depth;
    d.camera_point = back_project(patch.centroid, depth, k);
    d.range = d.camera_point.norm();
    if (d.range > options.max_range) continue;
    d.world_point = camera_pose.transform_point(d.camera_point);
    d.patch = std::move(patch);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace pollinator
