#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "eccnn/labels.hpp"

namespace eccnn {

// 8-bit single-channel raster.
struct GrayImage {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * w + x]; }
  bool operator==(const GrayImage&) const = default;
};

// Binary PGM (P5, maxval <= 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

// Masks are stored as PGM index images. Labels must lie in [0, num_classes)
// or equal kIgnoreIndex; num_classes <= 0 skips the range check.
LabelMap read_mask(const std::filesystem::path& path, int num_classes = 0);
void write_mask(const LabelMap& mask, const std::filesystem::path& path);

// Fixed color per class index; ignored pixels keep the gray value.
std::array<std::uint8_t, 3> class_color(int label);

// Binary PPM (P6) blending the image with the class colors 50/50.
void write_overlay(const GrayImage& image, const LabelMap& mask, const std::filesystem::path& path);

}  // namespace eccnn
