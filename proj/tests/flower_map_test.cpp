#include "pollinator/flower_map.hpp"

#include "test_support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pollinator {
namespace {

PositionObservation obs_at(const Vec3& p, double sigma) {
  PositionObservation o;
  o.position = p;
  o.covariance = Mat3::Identity() * sigma * sigma;
  return o;
}

FlowerTrack track_at(const Vec3& p, double sigma) {
  FlowerTrack t;
  t.mean = p;
  t.covariance = Mat3::Identity() * sigma * sigma;
  return t;
}

TEST(Association, EmptyListStartsTrack) {
  EXPECT_FALSE(associate_observation({}, obs_at(Vec3::Zero(), 0.005), {}).track_index.has_value());
}

TEST(Association, ObservationAtTrackMean) {
  const std::vector<FlowerTrack> tracks{track_at(Vec3(0.5, 0, 0.3), 0.005), track_at(Vec3(0.6, 0, 0.3), 0.005)};
  const Association a = associate_observation(tracks, obs_at(Vec3(0.6, 0, 0.3), 0.005), {});
  ASSERT_TRUE(a.track_index.has_value());
  EXPECT_EQ(*a.track_index, 1);
  EXPECT_NEAR(a.mahalanobis, 0.0, 1e-12);
}

TEST(Association, NearestByMahalanobis) {
  const std::vector<FlowerTrack> tracks{track_at(Vec3(0.5, 0, 0.3), 0.005), track_at(Vec3(0.6, 0, 0.3), 0.005)};
  const Association a = associate_observation(tracks, obs_at(Vec3(0.51, 0, 0.3), 0.005), {});
  ASSERT_TRUE(a.track_index.has_value());
  EXPECT_EQ(*a.track_index, 0);
  EXPECT_NEAR(a.mahalanobis, 0.01 / std::sqrt(2.0 * 0.005 * 0.005), 1e-9);
}

TEST(Association, OutsideGateAndJoinDistanceStartsTrack) {
  const std::vector<FlowerTrack> tracks{track_at(Vec3(0.5, 0, 0.3), 0.002)};
  EXPECT_FALSE(associate_observation(tracks, obs_at(Vec3(0.53, 0, 0.3), 0.002), {}).track_index.has_value());
  // Beyond the Mahalanobis gate but within the join distance.
  const Association a = associate_observation(tracks, obs_at(Vec3(0.515, 0, 0.3), 0.002), {});
  ASSERT_TRUE(a.track_index.has_value());
  EXPECT_GT(a.mahalanobis, AssociationGate{}.mahalanobis_threshold);
}

TEST(FuseOrientation, OneHotOnUniform) {
  const ClassDistribution p = fuse_orientation(ClassDistribution::uniform(3), ClassDistribution::one_hot(3, 2), 1.0);
  EXPECT_EQ(p.argmax(), 2);
  EXPECT_GT(p[2], 0.99);
}

TEST(FuseOrientation, ContradictoryObservationsSplitEvenly) {
  ClassDistribution p = ClassDistribution::uniform(3);
  p = fuse_orientation(p, ClassDistribution::one_hot(3, 1), 1.0, 0.01);
  p = fuse_orientation(p, ClassDistribution::one_hot(3, 2), 1.0, 0.01);
  EXPECT_NEAR(p[1], p[2], 1e-12);
  EXPECT_NEAR(p[1], 0.5, 0.01);
  EXPECT_LT(p[0], 0.01);
}

TEST(FuseOrientation, SeventyPercentGeneratorRecoversClass) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int truth = static_cast<int>(OrientationClass::kC2);
  int correct = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    ClassDistribution belief = ClassDistribution::uniform(3);
    for (int k = 0; k < 10; ++k) {
      const double r = u(rng);
      const int observed = r < 0.7 ? truth : r < 0.85 ? (truth + 1) % 3 : (truth + 2) % 3;
      belief = fuse_orientation(belief, ClassDistribution::one_hot(3, observed), 1.0, 0.02);
    }
    correct += belief.argmax() == truth;
  }
  EXPECT_GE(correct, 950);
}

TEST(CompensateOrientation, ZeroYawIsIdentity) {
  const ClassDistribution p(Eigen::Vector3d(0.2, 0.5, 0.3));
  const ClassDistribution q = compensate_orientation(p, 0.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(q[k], p[k], 1e-15);
}

TEST(CompensateOrientation, FullClassShifts) {
  const double t = kDefaultOrientationYaw;
  const auto c1 = ClassDistribution::one_hot(3, 0), c2 = ClassDistribution::one_hot(3, 1),
             c3 = ClassDistribution::one_hot(3, 2);
  EXPECT_NEAR(compensate_orientation(c1, t)[1], 1.0, 1e-12);
  EXPECT_NEAR(compensate_orientation(c1, -t)[2], 1.0, 1e-12);
  EXPECT_NEAR(compensate_orientation(c3, t)[0], 1.0, 1e-12);
  EXPECT_NEAR(compensate_orientation(c2, t)[1], 1.0, 1e-12);  // clamped at the end of the axis
  const ClassDistribution half = compensate_orientation(c1, 0.5 * t);
  EXPECT_NEAR(half[0], 0.5, 1e-12);
  EXPECT_NEAR(half[1], 0.5, 1e-12);
}

TEST(CompensateOrientation, PreservesMass) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 1.0), yaw(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d p(u(rng), u(rng), u(rng));
    p /= p.sum();
    const ClassDistribution q = compensate_orientation(ClassDistribution(p), yaw(rng));
    EXPECT_NEAR(q.probabilities().sum(), 1.0, 1e-12);
    EXPECT_GE(q.probabilities().minCoeff(), 0.0);
  }
  EXPECT_THROW(compensate_orientation(ClassDistribution::uniform(2), 0.1), std::invalid_argument);
}

TEST(Yaw, RotateAndSignedYawAreInverse) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> yaw(-3.1, 3.1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 d = rotate_yaw(Vec3::UnitX(), yaw(rng));
    const double y = yaw(rng);
    const Vec3 r = rotate_yaw(d, y);
    EXPECT_NEAR(r.norm(), 1.0, 1e-12);
    EXPECT_NEAR(r.z(), 0.0, 1e-15);
    EXPECT_NEAR(signed_yaw(d, r), y, 1e-12);
  }
}

TEST(Yaw, PositiveYawTurnsTowardObserversLeft) {
  // Flower faces -x toward an observer looking along +x; the observer's left is +y.
  const Vec3 toward_observer = -Vec3::UnitX();
  const Vec3 turned = rotate_yaw(toward_observer, 0.3);
  EXPECT_GT(turned.y(), 0.0);
  const Mat3 view = look_rotation(Vec3::UnitX());
  EXPECT_LT(view.col(0).dot(turned), 0.0);  // camera +x is the observer's right
}

TEST(RangeScaledCovariance, GrowsLinearlyInSigma) {
  EXPECT_LT((range_scaled_covariance(0.4) - Mat3::Identity() * 0.008 * 0.008).norm(), 1e-18);
  EXPECT_LT((range_scaled_covariance(0.8) - Mat3::Identity() * 0.016 * 0.016).norm(), 1e-18);
}

TEST(FlowerMap, FusesIntoOneConfirmedTrack) {
  FlowerMap map;
  const Vec3 truth(0.55, 0.0, 0.3);
  std::mt19937_64 rng(57);
  std::normal_distribution<double> n(0.0, 0.005);
  int id = -1;
  for (int k = 0; k < 10; ++k) {
    const int got = map.add_observation(obs_at(truth + Vec3(n(rng), n(rng), n(rng)), 0.005));
    if (k == 0) id = got;
    EXPECT_EQ(got, id);
    const FlowerTrack* t = map.find(id);
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(t->status, k + 1 >= 2 ? TrackStatus::kConfirmed : TrackStatus::kCandidate);
    Eigen::SelfAdjointEigenSolver<Mat3> es(t->covariance);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR(t->covariance.trace(), 3.0 * 0.005 * 0.005 / (k + 1), 1e-12);
  }
  EXPECT_EQ(map.tracks().size(), 1u);
  EXPECT_LT((map.tracks()[0].mean - truth).norm(), 0.006);
}

TEST(FlowerMap, FusedMeanMatchesWeightedAverage) {
  FlowerMap map;
  const std::vector<PositionObservation> obs{obs_at(Vec3(0.50, 0.0, 0.3), 0.004), obs_at(Vec3(0.505, 0.0, 0.3), 0.008),
                                             obs_at(Vec3(0.502, 0.003, 0.3), 0.006)};
  for (const auto& o : obs) map.add_observation(o);
  Mat3 info = Mat3::Zero();
  Vec3 weighted = Vec3::Zero();
  for (const auto& o : obs) {
    info += o.covariance.inverse();
    weighted += o.covariance.inverse() * o.position;
  }
  ASSERT_EQ(map.tracks().size(), 1u);
  EXPECT_LT((map.tracks()[0].mean - info.inverse() * weighted).norm(), 1e-9);
}

TEST(FlowerMap, FusionRmseIsConsistent) {
  const double sigma = 0.005;
  const int k_obs = 25, trials = 500;
  std::mt19937_64 rng(59);
  std::normal_distribution<double> n(0.0, sigma);
  double sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    FlowerMap map;
    const Vec3 truth(0.5, 0.1, 0.3);
    const int id = map.add_observation(obs_at(truth + Vec3(n(rng), n(rng), n(rng)), sigma));
    for (int k = 1; k < k_obs; ++k) map.add_observation_to(id, obs_at(truth + Vec3(n(rng), n(rng), n(rng)), sigma));
    ASSERT_EQ(map.tracks().size(), 1u);
    sq += (map.tracks()[0].mean - truth).squaredNorm();
  }
  const double per_axis_rmse = std::sqrt(sq / (3.0 * trials));
  EXPECT_LE(per_axis_rmse, 1.3 * sigma / std::sqrt(k_obs));
}

TEST(FlowerMap, AddObservationToUnknownTrackThrows) {
  FlowerMap map;
  EXPECT_THROW(map.add_observation_to(3, obs_at(Vec3::Zero(), 0.01)), std::out_of_range);
  EXPECT_THROW(map.set_status(3, TrackStatus::kPollinated), std::out_of_range);
}

TEST(Snapshot, EmptyAndCandidates) {
  FlowerMap map;
  EXPECT_TRUE(map.snapshot().empty());
  map.add_observation(obs_at(Vec3(0.5, 0, 0.3), 0.005));
  EXPECT_TRUE(map.snapshot().empty());
  map.add_observation(obs_at(Vec3(0.5, 0, 0.3), 0.005));
  EXPECT_EQ(map.snapshot().size(), 1u);
}

TEST(Snapshot, FrontalTrackFacesReferencePoint) {
  FlowerTrack t = track_at(Vec3(0.5, 0.0, 0.6), 0.005);
  t.observations = 3;
  t.status = TrackStatus::kConfirmed;
  t.orientation = ClassDistribution::one_hot(3, 0);
  const Vec3 reference(0.1, 0.0, 0.3);
  const std::vector<FlowerMapEntry> entries = flower_map_snapshot({t}, reference, 2);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_LT((entries[0].pose.z_axis() - Vec3(-1, 0, 0)).norm(), 1e-12);
  EXPECT_EQ(entries[0].orientation, OrientationClass::kC1);

  t.orientation = ClassDistribution::one_hot(3, 1);
  const Pose3 turned = track_pose(t, reference, kDefaultOrientationYaw);
  EXPECT_NEAR(signed_yaw(Vec3(-1, 0, 0), turned.z_axis()), kDefaultOrientationYaw, 1e-12);
}

TEST(Snapshot, CsvHeader) {
  std::ostringstream out;
  write_flower_map_csv(out, {});
  EXPECT_EQ(out.str(), "id,x,y,z,qw,qx,qy,qz,class,status\n");
}

}  // namespace
}  // namespace pollinator
