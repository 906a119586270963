#pragma once

#include "pollinator/config.hpp"
#include "pollinator/geometry.hpp"
#include "pollinator/trials.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

namespace pollinator::test {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do v = Vec3(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6);
  return v.normalized();
}

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline Pose3 random_pose(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return Pose3(Vec3(u(rng), u(rng), u(rng)), random_rotation(rng));
}

inline Mat3 random_spd(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a(i) = n(rng);
  return scale * scale * (a * a.transpose() + 0.5 * Mat3::Identity());
}

/// Perception models trained once per test binary on the default synthetic set.
inline const TrainedModels& default_models() {
  static const TrainedModels models = train_from_config(PipelineConfig{});
  return models;
}

}  // namespace pollinator::test
