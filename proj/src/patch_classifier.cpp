#include "pollinator/patch_classifier.hpp"

#include "pollinator/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

namespace pollinator {

namespace {

constexpr char kClassifierMagic[] = "PLRC";
constexpr std::uint32_t kClassifierVersion = 1;

std::string class_label(std::span<const std::string> names, int k) {
  return k < static_cast<int>(names.size()) ? names[k] : std::to_string(k);
}

}  // namespace

LogitVector::LogitVector(Eigen::VectorXd z) : z_(std::move(z)) {
  if (z_.size() == 0) throw ClassifierError("empty logit vector");
  if (!z_.allFinite()) throw ClassifierError("non-finite logit");
}

ClassDistribution::ClassDistribution(Eigen::VectorXd p) : p_(std::move(p)) {
  if (p_.size() == 0) throw ClassifierError("empty distribution");
  if ((p_.array() < 0.0).any() || !p_.allFinite()) throw ClassifierError("negative probability");
  if (std::abs(p_.sum() - 1.0) > 1e-9) throw ClassifierError("distribution does not sum to one");
}

ClassDistribution ClassDistribution::uniform(int k) {
  return ClassDistribution(Eigen::VectorXd::Constant(k, 1.0 / k));
}

ClassDistribution ClassDistribution::one_hot(int k, int index) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
  p[index] = 1.0;
  return ClassDistribution(std::move(p));
}

int ClassDistribution::argmax() const {
  int best = 0;
  for (Eigen::Index i = 1; i < p_.size(); ++i)
    if (p_[i] > p_[best]) best = static_cast<int>(i);
  return best;
}

ClassDistribution softmax(const LogitVector& z) {
  const Eigen::VectorXd& v = z.values();
  const Eigen::ArrayXd e = (v.array() - v.maxCoeff()).exp();
  return ClassDistribution((e / e.sum()).matrix());
}

double cross_entropy_loss(const ClassDistribution& p, const ClassDistribution& q) {
  if (p.size() != q.size()) throw ClassifierError("distribution size mismatch");
  double loss = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) loss -= std::log(std::max(p[k], 1e-300)) * q[k];
  return loss;
}

Eigen::VectorXd loss_gradient(const ClassDistribution& p, const ClassDistribution& q) {
  if (p.size() != q.size()) throw ClassifierError("distribution size mismatch");
  return p.probabilities() - q.probabilities();
}

double orientation_yaw(OrientationClass c, double theta) {
  switch (c) {
    case OrientationClass::kC1: return 0.0;
    case OrientationClass::kC2: return theta;
    case OrientationClass::kC3: return -theta;
  }
  return 0.0;
}

OrientationClass orientation_from_yaw(double yaw, double theta) {
  if (yaw >= 0.5 * theta) return OrientationClass::kC2;
  if (yaw <= -0.5 * theta) return OrientationClass::kC3;
  return OrientationClass::kC1;
}

const char* orientation_name(OrientationClass c) {
  switch (c) {
    case OrientationClass::kC1: return "C1";
    case OrientationClass::kC2: return "C2";
    case OrientationClass::kC3: return "C3";
  }
  return "?";
}

Eigen::VectorXd patch_features(const PatchRegion& patch, const RgbdImage& image) {
  const PixelRect& r = patch.bbox;
  if (r.x < 0 || r.y < 0 || r.width <= 0 || r.height <= 0 || r.x + r.width > image.width ||
      r.y + r.height > image.height)
    throw ClassifierError("patch outside image");
  std::array<double, 3> sum{}, sum_sq{};
  for (int v = r.y; v < r.y + r.height; ++v) {
    for (int u = r.x; u < r.x + r.width; ++u) {
      const Rgb8 c = image.color_at(u, v);
      const std::array<double, 3> ch{c.r / 255.0, c.g / 255.0, c.b / 255.0};
      for (int i = 0; i < 3; ++i) {
        sum[i] += ch[i];
        sum_sq[i] += ch[i] * ch[i];
      }
    }
  }
  const double n = static_cast<double>(r.area());
  Eigen::VectorXd f(kPatchFeatureCount);
  for (int i = 0; i < 3; ++i) {
    const double mean = sum[i] / n;
    f[i] = mean;
    f[3 + i] = std::sqrt(std::max(0.0, sum_sq[i] / n - mean * mean));
  }
  const PixelRect& t = patch.tight_box;
  f[6] = std::log(std::max(1, patch.area));
  f[7] = static_cast<double>(t.width) / static_cast<double>(std::max(1, t.height));
  f[8] = static_cast<double>(patch.area) / static_cast<double>(std::max(1, t.area()));
  return f;
}

LogisticClassifier::LogisticClassifier(Eigen::VectorXd feature_mean, Eigen::VectorXd feature_scale,
                                       Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : mean_(std::move(feature_mean)), scale_(std::move(feature_scale)), weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (weights_.rows() < 2) throw ClassifierError("classifier needs at least two classes");
  if (mean_.size() != weights_.cols() || scale_.size() != weights_.cols() || bias_.size() != weights_.rows())
    throw ClassifierError("classifier parameter shape mismatch");
  if ((scale_.array() <= 0.0).any()) throw ClassifierError("feature scale must be positive");
}

LogisticClassifier LogisticClassifier::zeros(int classes, int features) {
  return LogisticClassifier(Eigen::VectorXd::Zero(features), Eigen::VectorXd::Ones(features),
                            Eigen::MatrixXd::Zero(classes, features), Eigen::VectorXd::Zero(classes));
}

LogitVector LogisticClassifier::logits(const Eigen::VectorXd& features) const {
  if (features.size() != num_features()) throw ClassifierError("feature dimension mismatch");
  const Eigen::VectorXd x = (features - mean_).cwiseQuotient(scale_);
  return LogitVector(weights_ * x + bias_);
}

ClassDistribution LogisticClassifier::classify(const Eigen::VectorXd& features) const {
  return softmax(logits(features));
}

void LogisticClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ClassifierError("cannot write " + path.string());
  io::write_magic(out, kClassifierMagic, kClassifierVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(num_classes()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(num_features()));
  for (Eigen::Index i = 0; i < mean_.size(); ++i) io::write_le<double>(out, mean_[i]);
  for (Eigen::Index i = 0; i < scale_.size(); ++i) io::write_le<double>(out, scale_[i]);
  for (Eigen::Index k = 0; k < weights_.rows(); ++k)
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) io::write_le<double>(out, weights_(k, j));
  for (Eigen::Index k = 0; k < bias_.size(); ++k) io::write_le<double>(out, bias_[k]);
}

LogisticClassifier LogisticClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ClassifierError("cannot read " + path.string());
  if (io::read_magic(in, kClassifierMagic) != kClassifierVersion)
    throw io::FormatError("unsupported classifier version");
  const auto k = static_cast<Eigen::Index>(io::read_le<std::uint32_t>(in));
  const auto f = static_cast<Eigen::Index>(io::read_le<std::uint32_t>(in));
  if (k < 2 || k > 1024 || f < 1 || f > 1 << 20) throw io::FormatError("implausible classifier shape");
  Eigen::VectorXd mean(f), scale(f), bias(k);
  Eigen::MatrixXd w(k, f);
  for (Eigen::Index i = 0; i < f; ++i) mean[i] = io::read_le<double>(in);
  for (Eigen::Index i = 0; i < f; ++i) scale[i] = io::read_le<double>(in);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < f; ++c) w(r, c) = io::read_le<double>(in);
  for (Eigen::Index r = 0; r < k; ++r) bias[r] = io::read_le<double>(in);
  return LogisticClassifier(std::move(mean), std::move(scale), std::move(w), std::move(bias));
}

LogisticClassifier train_reference_classifier(std::span<const TrainingSample> dataset, int num_classes,
                                              const TrainingOptions& options,
                                              std::vector<double>* loss_history) {
  if (num_classes < 2) throw ClassifierError("need at least two classes");
  if (dataset.empty()) throw ClassifierError("empty training set");
  const Eigen::Index f = dataset.front().features.size();
  std::vector<int> class_counts(num_classes, 0);
  for (const auto& s : dataset) {
    if (s.features.size() != f) throw ClassifierError("inconsistent feature dimension");
    if (!s.features.allFinite()) throw ClassifierError("non-finite feature");
    if (s.label < 0 || s.label >= num_classes) throw ClassifierError("label out of range");
    ++class_counts[s.label];
  }
  for (int c : class_counts)
    if (c == 0) throw ClassifierError("degenerate dataset: a class has no samples");

  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd x(f, n);
  for (Eigen::Index i = 0; i < n; ++i) x.col(i) = dataset[i].features;
  const Eigen::VectorXd mean = x.rowwise().mean();
  x.colwise() -= mean;
  Eigen::VectorXd scale = (x.array().square().rowwise().sum() / static_cast<double>(n)).sqrt();
  for (Eigen::Index j = 0; j < f; ++j)
    if (!(scale[j] > 1e-12)) scale[j] = 1.0;
  x = scale.cwiseInverse().asDiagonal() * x;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, options.init_scale);
  Eigen::MatrixXd w(num_classes, f);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = init(rng);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_classes);

  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(num_classes, n);
  for (Eigen::Index i = 0; i < n; ++i) targets(dataset[i].label, i) = 1.0;

  const auto evaluate = [&](Eigen::MatrixXd& residual) {
    // Column-wise softmax, loss and the Eq. (p - q) logit gradient.
    Eigen::MatrixXd z = w * x;
    z.colwise() += b;
    double loss = 0.0;
    residual.resize(num_classes, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const ClassDistribution p = softmax(LogitVector(z.col(i)));
      const ClassDistribution q(targets.col(i));
      loss += cross_entropy_loss(p, q);
      residual.col(i) = loss_gradient(p, q);
    }
    return loss / static_cast<double>(n);
  };

  Eigen::MatrixXd residual;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double loss = evaluate(residual);
    if (loss_history) loss_history->push_back(loss);
    const Eigen::MatrixXd grad_w = residual * x.transpose() / static_cast<double>(n);
    const Eigen::VectorXd grad_b = residual.rowwise().sum() / static_cast<double>(n);
    w -= options.learning_rate * grad_w;
    b -= options.learning_rate * grad_b;
  }
  if (loss_history) loss_history->push_back(evaluate(residual));
  return LogisticClassifier(mean, scale, std::move(w), std::move(b));
}

PatchDecision classify_patch(const PatchClassifier& classifier, const PatchRegion& patch,
                             const RgbdImage& image) {
  if (classifier.num_classes() != 2) throw ClassifierError("flower classifier must be binary");
  const ClassDistribution p = classifier.classify(patch_features(patch, image));
  const int label = p.argmax();
  return {label == 1, p[label]};
}

OrientationDecision classify_orientation(const PatchClassifier& classifier, const PatchRegion& patch,
                                         const RgbdImage& image) {
  if (classifier.num_classes() != 3) throw ClassifierError("orientation classifier must have 3 classes");
  ClassDistribution p = classifier.classify(patch_features(patch, image));
  const auto c = static_cast<OrientationClass>(p.argmax());
  return {c, std::move(p)};
}

ClassificationMetrics compute_metrics(std::span<const Prediction> predictions, int num_classes) {
  if (predictions.empty()) throw ClassifierError("no predictions");
  if (num_classes < 2) throw ClassifierError("need at least two classes");
  ClassificationMetrics m;
  m.confusion = Eigen::MatrixX<std::int64_t>::Zero(num_classes, num_classes);
  for (const Prediction& p : predictions) {
    if (p.predicted < 0 || p.predicted >= num_classes || p.actual < 0 || p.actual >= num_classes)
      throw ClassifierError("prediction label out of range");
    ++m.confusion(p.actual, p.predicted);
  }
  m.per_class.resize(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    ClassMetrics& c = m.per_class[k];
    c.true_positives = m.confusion(k, k);
    c.support = m.confusion.row(k).sum();
    c.false_negatives = c.support - c.true_positives;
    c.false_positives = m.confusion.col(k).sum() - c.true_positives;
    if (c.true_positives + c.false_positives > 0)
      c.precision = static_cast<double>(c.true_positives) / static_cast<double>(c.true_positives + c.false_positives);
    if (c.support > 0) c.recall = static_cast<double>(c.true_positives) / static_cast<double>(c.support);
  }
  return m;
}

void ClassificationMetrics::write_table(std::ostream& out, std::span<const std::string> class_names) const {
  const auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("     -");
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << std::setw(5) << *v * 100.0 << '%';
    return s.str();
  };
  out << "class       precision  recall   support\n";
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    out << std::left << std::setw(12) << class_label(class_names, static_cast<int>(k)) << std::right
        << std::setw(9) << pct(per_class[k].precision) << std::setw(9) << pct(per_class[k].recall)
        << std::setw(10) << per_class[k].support << '\n';
  }
}

void ClassificationMetrics::write_csv(std::ostream& out, std::span<const std::string> class_names) const {
  out << "class,precision,recall,support\n";
  out << std::setprecision(10);
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    out << class_label(class_names, static_cast<int>(k)) << ',';
    if (per_class[k].precision) out << *per_class[k].precision;
    out << ',';
    if (per_class[k].recall) out << *per_class[k].recall;
    out << ',' << per_class[k].support << '\n';
  }
}

}  // namespace pollinator
