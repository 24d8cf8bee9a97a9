#pragma once

#include "mvsense/digits.hpp"
#include "mvsense/layout.hpp"
#include "mvsense/random.hpp"
#include "mvsense/scene.hpp"

#include <vector>

namespace mvsense {

/// Material ranges shared by targets and clutter.
struct EmRanges {
  double eps_min = 1.5;
  double eps_max = 2.5;
  double sigma_min = 0.0;
  double sigma_max = 0.1; // S/m

  void validate() const;
  bool contains(double eps_r, double sigma) const;
};

struct RasterOptions {
  double threshold = 0.5;
  /// Fraction of the RoI side covered by the image box (centered).
  double fill_fraction = 0.8;
};

/// Bilinear sample of `image` at fractional (row, col); zero outside.
double sample_bilinear(const GrayImage &image, double row, double col);

/// Homogeneous target from a grayscale image. The image box is scaled to
/// `fill_fraction` of the RoI, resampled bilinearly at pixel centers and
/// thresholded. Throws DegenerateScene if nothing survives the threshold and
/// InvalidArgument if (eps_r, sigma) falls outside `ranges`.
TargetScene rasterize_binary_image(const GrayImage &image, double eps_r, double sigma,
                                   const RoiGrid &grid, const EmRanges &ranges = {},
                                   const RasterOptions &opts = {});

enum class ShapeKind { Circle, Rectangle };

/// Axis-aligned rectangle (width x height) or circle (diameter = width).
struct Shape {
  ShapeKind kind = ShapeKind::Circle;
  Vec2 center;
  double width = 0.1;
  double height = 0.1;
  double eps_r = 2.0;
  double sigma = 0.0;

  bool contains(Vec2 p) const;
  double bounding_radius() const;
};

struct MultiObjRanges {
  int min_objects = 2;
  int max_objects = 4;
  double min_size = 0.06; // m, side or diameter
  double max_size = 0.15;
  int max_retries = 1000;
  EmRanges em;
};

/// Places non-overlapping shapes inside the RoI (bounding circles disjoint).
/// Throws DegenerateScene when a shape cannot be placed within max_retries.
std::vector<Shape> place_objects(Rng &rng, const RoiGrid &grid, const MultiObjRanges &ranges);

/// Pixel centers inside a shape take its material; first shape wins.
TargetScene rasterize_shapes(const std::vector<Shape> &shapes, const RoiGrid &grid);

TargetScene gen_multi_obj(Rng &rng, const RoiGrid &grid, const MultiObjRanges &ranges = {});

/// Disk with area-weighted (partial-volume) pixel materials, using
/// `supersample`^2 coverage samples per pixel. Materials mix linearly in
/// contrast: eps = 1 + f (eps_r - 1), sigma = f sigma.
TargetScene rasterize_disk_coverage(const RoiGrid &grid, Vec2 center, double radius, double eps_r,
                                    double sigma, int supersample = 16);

struct ClutterRanges {
  double diameter = 0.05;
  double band_min = 0.5; // clutter centers satisfy band_min < |x|, |y| < band_max
  double band_max = 1.0;
  EmRanges em;
};

std::vector<ClutterDisk> gen_clutter(Rng &rng, int count, const ClutterRanges &ranges = {});

struct LayoutRanges {
  double bs_radius_min = 80.0;
  double bs_radius_max = 100.0;
  double ue_radius_min = 4.0;
  double ue_radius_max = 10.0;
  int max_bs = 16;
  int max_ue = 32;
  int bs_array_antennas = 4;
  double element_spacing = 0.05; // half wavelength at 3 GHz
};

/// Uniform radii and angles; ULA normals toward the origin.
ViewLayout sample_view_layout(Rng &rng, int num_bs, int num_ue, const LayoutRanges &ranges = {});

} // namespace mvsense
