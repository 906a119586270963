#pragma once

#include "pollinator/geometry.hpp"
#include "pollinator/segmentation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace pollinator {

class ClassifierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unnormalized log-probabilities; entries must be finite.
class LogitVector {
 public:
  explicit LogitVector(Eigen::VectorXd z);
  const Eigen::VectorXd& values() const { return z_; }
  Eigen::Index size() const { return z_.size(); }

 private:
  Eigen::VectorXd z_;
};

/// Probability vector: entries >= 0 summing to 1 within 1e-9.
class ClassDistribution {
 public:
  explicit ClassDistribution(Eigen::VectorXd p);
  static ClassDistribution uniform(int k);
  static ClassDistribution one_hot(int k, int index);

  const Eigen::VectorXd& probabilities() const { return p_; }
  double operator[](Eigen::Index i) const { return p_[i]; }
  Eigen::Index size() const { return p_.size(); }

  /// Highest-probability class; ties resolve to the lowest index.
  int argmax() const;

 private:
  Eigen::VectorXd p_;
};

ClassDistribution softmax(const LogitVector& z);
/// -sum_k log(p_k) q_k with p clamped below at 1e-300.
double cross_entropy_loss(const ClassDistribution& p, const ClassDistribution& q);
/// d(loss)/d(logit_k) = p_k - q_k.
Eigen::VectorXd loss_gradient(const ClassDistribution& p, const ClassDistribution& q);

enum class OrientationClass : int {
  kC1 = 0,  // facing the camera
  kC2 = 1,  // turned toward the observer's left
  kC3 = 2,  // turned toward the observer's right
};

inline constexpr double kDefaultOrientationYaw = 0.5235987755982988;  // 30 degrees

/// Yaw offset of the flower normal for each class: 0, +theta, -theta.
double orientation_yaw(OrientationClass c, double theta = kDefaultOrientationYaw);
/// Nearest class for a relative yaw.
OrientationClass orientation_from_yaw(double yaw, double theta = kDefaultOrientationYaw);
const char* orientation_name(OrientationClass c);

/// Fixed feature recipe on the raw RGB rectangle of a patch:
/// mean r,g,b / 255, std r,g,b / 255, log(area), aspect ratio (w/h), fill ratio.
inline constexpr int kPatchFeatureCount = 9;
Eigen::VectorXd patch_features(const PatchRegion& patch, const RgbdImage& image);

/// Seam for patch classifiers; implementations must return a valid distribution for
/// any finite feature vector.
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;
  virtual int num_classes() const = 0;
  virtual int num_features() const = 0;
  virtual ClassDistribution classify(const Eigen::VectorXd& features) const = 0;
};

/// Multinomial logistic regression over standardized features.
class LogisticClassifier final : public PatchClassifier {
 public:
  LogisticClassifier(Eigen::VectorXd feature_mean, Eigen::VectorXd feature_scale,
                     Eigen::MatrixXd weights, Eigen::VectorXd bias);

  /// All-zero weights over `features` inputs; predicts the uniform distribution.
  static LogisticClassifier zeros(int classes, int features);

  int num_classes() const override { return static_cast<int>(weights_.rows()); }
  int num_features() const override { return static_cast<int>(weights_.cols()); }
  ClassDistribution classify(const Eigen::VectorXd& features) const override;
  LogitVector logits(const Eigen::VectorXd& features) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const Eigen::VectorXd& feature_mean() const { return mean_; }
  const Eigen::VectorXd& feature_scale() const { return scale_; }

  void save(const std::filesystem::path& path) const;
  static LogisticClassifier load(const std::filesystem::path& path);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

struct TrainingSample {
  Eigen::VectorXd features;
  int label = 0;
};

/// Largest full-batch step with a guaranteed non-increasing loss for standardized
/// features: the mean-loss Hessian is bounded by (F + 1) / 2.
inline double stable_learning_rate(int features) { return 4.0 / (features + 1.0); }

struct TrainingOptions {
  int epochs = 600;
  double learning_rate = 0.3;  // below stable_learning_rate(kPatchFeatureCount) = 0.4
  std::uint64_t seed = 1;
  double init_scale = 1e-3;
};

/// Full-batch gradient descent on the softmax cross-entropy, using loss_gradient as
/// the per-example logit gradient. `loss_history`, when given, receives the mean
/// training loss before each epoch and after the last one.
LogisticClassifier train_reference_classifier(std::span<const TrainingSample> dataset, int num_classes,
                                              const TrainingOptions& options = {},
                                              std::vector<double>* loss_history = nullptr);

struct PatchDecision {
  bool is_flower = false;
  double probability = 0.0;
};

/// Binary classifier convention: class 0 = non-flower, class 1 = flower.
PatchDecision classify_patch(const PatchClassifier& classifier, const PatchRegion& patch,
                             const RgbdImage& image);

struct OrientationDecision {
  OrientationClass orientation = OrientationClass::kC1;
  ClassDistribution distribution = ClassDistribution::uniform(3);
};

OrientationDecision classify_orientation(const PatchClassifier& classifier, const PatchRegion& patch,
                                         const RgbdImage& image);

struct ClassMetrics {
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
  std::int64_t support = 0;               // actual count of the class
  std::optional<double> precision;        // absent when nothing was predicted as the class
  std::optional<double> recall;           // absent when the class never occurs
};

struct ClassificationMetrics {
  Eigen::MatrixX<std::int64_t> confusion;  // rows: actual, cols: predicted
  std::vector<ClassMetrics> per_class;

  void write_table(std::ostream& out, std::span<const std::string> class_names = {}) const;
  void write_csv(std::ostream& out, std::span<const std::string> class_names = {}) const;
};

struct Prediction {
  int predicted = 0;
  int actual = 0;
};

ClassificationMetrics compute_metrics(std::span<const Prediction> predictions, int num_classes);

}  // namespace pollinator
