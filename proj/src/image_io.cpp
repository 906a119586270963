#include "pollinator/image_io.hpp"

#include "pollinator/binary_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace pollinator::io {

namespace {

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

void skip_space_and_comments(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

NetpbmHeader read_header(std::istream& in) {
  NetpbmHeader h;
  in >> h.magic;
  skip_space_and_comments(in);
  in >> h.width;
  skip_space_and_comments(in);
  in >> h.height;
  skip_space_and_comments(in);
  in >> h.maxval;
  in.get();  // single whitespace before raster
  if (!in || h.width <= 0 || h.height <= 0 || h.maxval != 255)
    throw FormatError("unsupported Netpbm header");
  return h;
}

}  // namespace

RgbdImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  const NetpbmHeader h = read_header(in);
  if (h.magic != "P6") throw FormatError(path.string() + " is not a binary PPM");
  RgbdImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size() * 3));
  if (!in) throw FormatError("truncated PPM " + path.string());
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbdImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size() * 3));
}

BinaryMask read_pgm_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  const NetpbmHeader h = read_header(in);
  if (h.magic != "P5") throw FormatError(path.string() + " is not a binary PGM");
  BinaryMask mask(h.width, h.height);
  in.read(reinterpret_cast<char*>(mask.data.data()), static_cast<std::streamsize>(mask.data.size()));
  if (!in) throw FormatError("truncated PGM " + path.string());
  for (auto& v : mask.data) v = v != 0 ? 1 : 0;
  return mask;
}

void write_pgm_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  for (auto v : mask.data) out.put(v ? static_cast<char>(255) : 0);
}

std::vector<LabeledImage> load_labeled_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> scenes;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".ppm" && !p.stem().string().ends_with("_mask")) scenes.push_back(p);
  }
  std::sort(scenes.begin(), scenes.end());
  std::vector<LabeledImage> out;
  for (const auto& scene : scenes) {
    const auto mask_path = scene.parent_path() / (scene.stem().string() + "_mask.pgm");
    if (!std::filesystem::exists(mask_path)) throw FormatError("missing label mask " + mask_path.string());
    LabeledImage item{read_ppm(scene), read_pgm_mask(mask_path)};
    if (item.labels.width != item.image.width || item.labels.height != item.image.height)
      throw FormatError("mask size mismatch for " + scene.string());
    out.push_back(std::move(item));
  }
  if (out.empty()) throw FormatError("no labeled images in " + dir.string());
  return out;
}

}  // namespace pollinator::io
