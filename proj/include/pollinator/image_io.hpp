#pragma once

#include "pollinator/geometry.hpp"
#include "pollinator/segmentation.hpp"

#include <filesystem>
#include <vector>

namespace pollinator::io {

// Binary Netpbm: P6 for color, P5 for 8-bit gray.
RgbdImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbdImage& image);
BinaryMask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// Loads every `<name>.ppm` with a sibling `<name>_mask.pgm` (nonzero = flower),
/// sorted by name.
std::vector<LabeledImage> load_labeled_directory(const std::filesystem::path& dir);

}  // namespace pollinator::io
