#pragma once

#include "mvsense/random.hpp"

#include <filesystem>
#include <vector>

namespace mvsense {

/// Row-major grayscale image with intensities in [0, 1].
struct GrayImage {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r * cols + c)]; }
  double &at(int r, int c) { return pixels[static_cast<std::size_t>(r * cols + c)]; }
};

/// Handwriting-like 28x28 digit rendered from a stroke skeleton with random
/// rotation, scale, shear, offset and stroke width. The glyph fits the
/// central 20x20 box like MNIST digits.
GrayImage procedural_digit(int label, Rng &rng);

/// Reads images from an MNIST IDX3 file (magic 0x00000803). `limit` caps the
/// number of images read (0 = all). Throws FormatError on malformed input.
std::vector<GrayImage> load_idx_images(const std::filesystem::path &path, std::size_t limit = 0);

/// Reads labels from an MNIST IDX1 file (magic 0x00000801).
std::vector<int> load_idx_labels(const std::filesystem::path &path, std::size_t limit = 0);

} // namespace mvsense
