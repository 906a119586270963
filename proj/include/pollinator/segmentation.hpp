#pragma once

#include "pollinator/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace pollinator {

enum class PixelLabel : std::uint8_t { kBackground = 0, kFlower = 1 };

class SegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  void set(int u, int v, std::uint8_t value) { data[static_cast<std::size_t>(v) * width + u] = value; }
  std::size_t count() const;
};

/// A training image with its per-pixel label mask (nonzero = flower).
struct LabeledImage {
  RgbdImage image;
  BinaryMask labels;
};

struct ColorModelOptions {
  double smoothing = 1.0;       // Laplace pseudo-count per bin
  bool uniform_priors = false;  // otherwise per-image pixel-frequency priors
};

/// Two-class naive Bayes color model: priors p(l) and per-channel likelihoods p(c|l).
///
/// Histograms are normalized per training image before averaging, so every image
/// contributes equally regardless of resolution. The smoothing pseudo-count is
/// expressed against a nominal sample of `kReferenceSamples` pixels, which keeps the
/// smoothed model independent of image resolution as well.
class ColorHistogramModel {
 public:
  static constexpr int kLabels = 2;
  static constexpr int kBins = 256;
  static constexpr double kReferenceSamples = 10000.0;

  using ChannelTable = std::array<double, kBins>;
  using ClassTables = std::array<ChannelTable, 3>;

  ColorHistogramModel(const std::array<double, kLabels>& priors,
                      const std::array<ClassTables, kLabels>& likelihoods, double smoothing);

  double prior(PixelLabel l) const { return priors_[static_cast<int>(l)]; }
  double likelihood(PixelLabel l, int channel, int bin) const {
    return likelihoods_[static_cast<int>(l)][channel][bin];
  }
  double smoothing() const { return smoothing_; }

  /// log p(l) + log p(r|l) + log p(g|l) + log p(b|l), accumulated left to right.
  double log_score(PixelLabel l, Rgb8 c) const {
    const int i = static_cast<int>(l);
    return ((log_prior_[i] + log_lik_[i][0][c.r]) + log_lik_[i][1][c.g]) + log_lik_[i][2][c.b];
  }
  double log_prior(int label) const { return log_prior_[label]; }
  const ClassTables& log_likelihoods(int label) const { return log_lik_[label]; }

  void save(const std::filesystem::path& path) const;
  static ColorHistogramModel load(const std::filesystem::path& path);

 private:
  std::array<double, kLabels> priors_{};
  std::array<ClassTables, kLabels> likelihoods_{};
  std::array<double, kLabels> log_prior_{};
  std::array<ClassTables, kLabels> log_lik_{};
  double smoothing_ = 1.0;
};

ColorHistogramModel train_color_model(std::span<const LabeledImage> images,
                                      const ColorModelOptions& options = {});

/// MAP label; ties go to background.
PixelLabel classify_pixel(const ColorHistogramModel& model, Rgb8 pixel);

/// Precomputed MAP label for every color. 8 bits per channel gives the full 2^24
/// table; 5 bits per channel gives a 2^15 table evaluated at bin centers.
class ColorLut {
 public:
  static ColorLut build(const ColorHistogramModel& model, int bits_per_channel = 8);

  PixelLabel lookup(Rgb8 c) const { return static_cast<PixelLabel>(table_[index_of(c)]); }
  std::size_t index_of(Rgb8 c) const {
    const int shift = 8 - bits_;
    return (static_cast<std::size_t>(c.r >> shift) << (2 * bits_)) |
           (static_cast<std::size_t>(c.g >> shift) << bits_) | static_cast<std::size_t>(c.b >> shift);
  }
  /// Color the entry at `index` was evaluated on.
  Rgb8 representative(std::size_t index) const;

  int bits_per_channel() const { return bits_; }
  std::size_t size() const { return table_.size(); }
  const std::vector<std::uint8_t>& table() const { return table_; }
  std::size_t flower_entries() const;

  void save(const std::filesystem::path& path) const;
  static ColorLut load(const std::filesystem::path& path);

 private:
  int bits_ = 8;
  std::vector<std::uint8_t> table_;
};

inline std::size_t pack_rgb(Rgb8 c) {
  return (static_cast<std::size_t>(c.r) << 16) | (static_cast<std::size_t>(c.g) << 8) | c.b;
}
inline Rgb8 unpack_rgb(std::size_t i) {
  return {static_cast<std::uint8_t>((i >> 16) & 0xFF), static_cast<std::uint8_t>((i >> 8) & 0xFF),
          static_cast<std::uint8_t>(i & 0xFF)};
}

/// One table lookup per pixel; depth is ignored.
BinaryMask segment_image(const ColorLut& lut, const RgbdImage& image);

struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(int u, int v) const { return u >= x && v >= y && u < x + width && v < y + height; }
  int area() const { return width * height; }
};

struct PatchRegion {
  PixelRect bbox;       // inflated and clipped to the image
  PixelRect tight_box;  // component extent before inflation
  std::vector<std::array<int, 2>> pixels;
  PixelCoord centroid;
  int area = 0;

  bool touches_border(int image_width, int image_height) const {
    return tight_box.x == 0 || tight_box.y == 0 || tight_box.x + tight_box.width == image_width ||
           tight_box.y + tight_box.height == image_height;
  }
};

struct PatchOptions {
  int min_area = 50;
  int inflation = 4;
};

/// 8-connected components of the mask with area >= min_area, largest first.
std::vector<PatchRegion> extract_patches(const BinaryMask& mask, const PatchOptions& options = {});

}  // namespace pollinator
