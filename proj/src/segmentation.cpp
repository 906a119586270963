#include "pollinator/segmentation.hpp"

#include "pollinator/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pollinator {

namespace {

constexpr char kModelMagic[] = "PNBC";
constexpr char kLutMagic[] = "PLUT";
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

ColorHistogramModel::ColorHistogramModel(const std::array<double, kLabels>& priors,
                                         const std::array<ClassTables, kLabels>& likelihoods,
                                         double smoothing)
    : priors_(priors), likelihoods_(likelihoods), smoothing_(smoothing) {
  const double total = priors_[0] + priors_[1];
  if (!(priors_[0] > 0.0 && priors_[1] > 0.0))
    throw SegmentationError("color model priors must be positive");
  for (int l = 0; l < kLabels; ++l) {
    priors_[l] /= total;
    log_prior_[l] = std::log(priors_[l]);
    for (int c = 0; c < 3; ++c) {
      for (int b = 0; b < kBins; ++b) {
        const double p = likelihoods_[l][c][b];
        if (!(p > 0.0)) throw SegmentationError("color model likelihoods must be positive");
        log_lik_[l][c][b] = std::log(p);
      }
    }
  }
}

void ColorHistogramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SegmentationError("cannot write " + path.string());
  io::write_magic(out, kModelMagic, kFormatVersion);
  io::write_le<std::uint32_t>(out, kLabels);
  io::write_le<double>(out, smoothing_);
  for (double p : priors_) io::write_le<double>(out, p);
  for (const auto& cls : likelihoods_)
    for (const auto& ch : cls)
      for (double p : ch) io::write_le<double>(out, p);
}

ColorHistogramModel ColorHistogramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SegmentationError("cannot read " + path.string());
  if (io::read_magic(in, kModelMagic) != kFormatVersion)
    throw io::FormatError("unsupported color model version");
  if (io::read_le<std::uint32_t>(in) != kLabels) throw io::FormatError("unsupported label count");
  const double smoothing = io::read_le<double>(in);
  std::array<double, kLabels> priors{};
  for (double& p : priors) p = io::read_le<double>(in);
  std::array<ClassTables, kLabels> lik{};
  for (auto& cls : lik)
    for (auto& ch : cls)
      for (double& p : ch) p = io::read_le<double>(in);
  return ColorHistogramModel(priors, lik, smoothing);
}

ColorHistogramModel train_color_model(std::span<const LabeledImage> images,
                                      const ColorModelOptions& options) {
  using Tables = ColorHistogramModel::ClassTables;
  constexpr int kL = ColorHistogramModel::kLabels;
  constexpr int kB = ColorHistogramModel::kBins;
  if (images.empty()) throw SegmentationError("no training images");
  if (!(options.smoothing >= 0.0)) throw SegmentationError("smoothing must be non-negative");

  std::array<Tables, kL> mean_freq{};
  std::array<int, kL> images_with_class{};
  std::array<double, kL> prior_sum{};

  for (const LabeledImage& item : images) {
    const RgbdImage& img = item.image;
    if (item.labels.width != img.width || item.labels.height != img.height)
      throw SegmentationError("label mask size differs from image");
    if (img.rgb.empty()) throw SegmentationError("empty training image");

    std::array<std::array<std::array<std::uint64_t, kB>, 3>, kL> counts{};
    std::array<std::uint64_t, kL> n{};
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
      const int l = item.labels.data[i] != 0 ? 1 : 0;
      const Rgb8 c = img.rgb[i];
      ++counts[l][0][c.r];
      ++counts[l][1][c.g];
      ++counts[l][2][c.b];
      ++n[l];
    }
    const double total = static_cast<double>(n[0] + n[1]);
    for (int l = 0; l < kL; ++l) {
      prior_sum[l] += static_cast<double>(n[l]) / total;
      if (n[l] == 0) continue;
      ++images_with_class[l];
      const double nl = static_cast<double>(n[l]);
      for (int ch = 0; ch < 3; ++ch)
        for (int b = 0; b < kB; ++b) mean_freq[l][ch][b] += static_cast<double>(counts[l][ch][b]) / nl;
    }
  }

  std::array<Tables, kL> likelihoods{};
  constexpr double kRef = ColorHistogramModel::kReferenceSamples;
  const double alpha = options.smoothing;
  for (int l = 0; l < kL; ++l) {
    if (images_with_class[l] == 0)
      throw SegmentationError(l == 1 ? "no flower pixels in training set"
                                     : "no background pixels in training set");
    for (int ch = 0; ch < 3; ++ch) {
      for (int b = 0; b < kB; ++b) {
        const double f = mean_freq[l][ch][b] / images_with_class[l];
        likelihoods[l][ch][b] = (f * kRef + alpha) / (kRef + kB * alpha);
      }
    }
  }

  std::array<double, kL> priors{};
  if (options.uniform_priors) {
    priors.fill(1.0 / kL);
  } else {
    for (int l = 0; l < kL; ++l) priors[l] = prior_sum[l] / static_cast<double>(images.size());
  }
  return ColorHistogramModel(priors, likelihoods, options.smoothing);
}

PixelLabel classify_pixel(const ColorHistogramModel& model, Rgb8 pixel) {
  return model.log_score(PixelLabel::kFlower, pixel) > model.log_score(PixelLabel::kBackground, pixel)
             ? PixelLabel::kFlower
             : PixelLabel::kBackground;
}

ColorLut ColorLut::build(const ColorHistogramModel& model, int bits_per_channel) {
  if (bits_per_channel != 8 && bits_per_channel != 5)
    throw SegmentationError("color LUT supports 8 or 5 bits per channel");
  ColorLut lut;
  lut.bits_ = bits_per_channel;
  const int levels = 1 << bits_per_channel;
  lut.table_.assign(static_cast<std::size_t>(levels) * levels * levels, 0);

  // Per-class partial sums in exactly the order classify_pixel uses, so entries match
  // bit for bit.
  const auto value_of = [&](int level) {
    return bits_per_channel == 8 ? level : ((level << (8 - bits_per_channel)) | (1 << (7 - bits_per_channel)));
  };
  const auto& bg = model.log_likelihoods(0);
  const auto& fl = model.log_likelihoods(1);
  const double bg_prior = model.log_prior(0);
  const double fl_prior = model.log_prior(1);
  std::size_t idx = 0;
  for (int r = 0; r < levels; ++r) {
    const int rv = value_of(r);
    const double bg_r = bg_prior + bg[0][rv];
    const double fl_r = fl_prior + fl[0][rv];
    for (int g = 0; g < levels; ++g) {
      const int gv = value_of(g);
      const double bg_rg = bg_r + bg[1][gv];
      const double fl_rg = fl_r + fl[1][gv];
      const double* bg_b = bg[2].data();
      const double* fl_b = fl[2].data();
      for (int b = 0; b < levels; ++b, ++idx) {
        const int bv = value_of(b);
        lut.table_[idx] = (fl_rg + fl_b[bv]) > (bg_rg + bg_b[bv]) ? 1 : 0;
      }
    }
  }
  return lut;
}

Rgb8 ColorLut::representative(std::size_t index) const {
  const std::size_t mask = (std::size_t{1} << bits_) - 1;
  const auto value_of = [&](std::size_t level) -> std::uint8_t {
    return bits_ == 8 ? static_cast<std::uint8_t>(level)
                      : static_cast<std::uint8_t>((level << (8 - bits_)) | (std::size_t{1} << (7 - bits_)));
  };
  return {value_of((index >> (2 * bits_)) & mask), value_of((index >> bits_) & mask), value_of(index & mask)};
}

std::size_t ColorLut::flower_entries() const {
  return static_cast<std::size_t>(std::count(table_.begin(), table_.end(), std::uint8_t{1}));
}

void ColorLut::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SegmentationError("cannot write " + path.string());
  io::write_magic(out, kLutMagic, kFormatVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bits_));
  io::write_le<std::uint64_t>(out, table_.size());
  out.write(reinterpret_cast<const char*>(table_.data()), static_cast<std::streamsize>(table_.size()));
}

ColorLut ColorLut::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SegmentationError("cannot read " + path.string());
  if (io::read_magic(in, kLutMagic) != kFormatVersion) throw io::FormatError("unsupported LUT version");
  ColorLut lut;
  lut.bits_ = static_cast<int>(io::read_le<std::uint32_t>(in));
  if (lut.bits_ != 8 && lut.bits_ != 5) throw io::FormatError("bad LUT bit depth");
  const auto n = io::read_le<std::uint64_t>(in);
  if (n != (std::uint64_t{1} << (3 * lut.bits_))) throw io::FormatError("bad LUT length");
  lut.table_.resize(n);
  in.read(reinterpret_cast<char*>(lut.table_.data()), static_cast<std::streamsize>(n));
  if (!in) throw io::FormatError("truncated LUT");
  return lut;
}

BinaryMask segment_image(const ColorLut& lut, const RgbdImage& image) {
  BinaryMask mask(image.width, image.height);
  for (std::size_t i = 0; i < image.rgb.size(); ++i)
    mask.data[i] = static_cast<std::uint8_t>(lut.lookup(image.rgb[i]));
  return mask;
}

std::vector<PatchRegion> extract_patches(const BinaryMask& mask, const PatchOptions& options) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<std::uint8_t> visited(mask.data.size(), 0);
  std::vector<PatchRegion> patches;
  std::vector<std::array<int, 2>> stack;

  for (int v0 = 0; v0 < h; ++v0) {
    for (int u0 = 0; u0 < w; ++u0) {
      const std::size_t i0 = static_cast<std::size_t>(v0) * w + u0;
      if (!mask.data[i0] || visited[i0]) continue;

      PatchRegion region;
      int umin = u0, umax = u0, vmin = v0, vmax = v0;
      double su = 0.0, sv = 0.0;
      visited[i0] = 1;
      stack.push_back({u0, v0});
      while (!stack.empty()) {
        const auto [u, v] = stack.back();
        stack.pop_back();
        region.pixels.push_back({u, v});
        su += u;
        sv += v;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int nu = u + du, nv = v + dv;
            if ((du == 0 && dv == 0) || nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
            const std::size_t ni = static_cast<std::size_t>(nv) * w + nu;
            if (mask.data[ni] && !visited[ni]) {
              visited[ni] = 1;
              stack.push_back({nu, nv});
            }
          }
        }
      }

      region.area = static_cast<int>(region.pixels.size());
      if (region.area < options.min_area) continue;
      std::sort(region.pixels.begin(), region.pixels.end(),
                [](const auto& a, const auto& b) { return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0]; });
      region.centroid = {su / region.area, sv / region.area};
      region.tight_box = {umin, vmin, umax - umin + 1, vmax - vmin + 1};
      const int x0 = std::max(0, umin - options.inflation);
      const int y0 = std::max(0, vmin - options.inflation);
      const int x1 = std::min(w - 1, umax + options.inflation);
      const int y1 = std::min(h - 1, vmax + options.inflation);
      region.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      patches.push_back(std::move(region));
    }
  }
  std::stable_sort(patches.begin(), patches.end(),
                   [](const PatchRegion& a, const PatchRegion& b) { return a.area > b.area; });
  return patches;
}

}  // namespace pollinator
