#include "mvsense/generators.hpp"

#include <cmath>
#include <string>

namespace mvsense {

void EmRanges::validate() const {
  if (!(eps_min >= 1.0) || !(eps_max >= eps_min) || !(sigma_min >= 0.0) || !(sigma_max >= sigma_min))
    throw InvalidArgument("EmRanges: need 1 <= eps_min <= eps_max and 0 <= sigma_min <= sigma_max");
}

bool EmRanges::contains(double eps_r, double sigma) const {
  return eps_r >= eps_min && eps_r <= eps_max && sigma >= sigma_min && sigma <= sigma_max;
}

double sample_bilinear(const GrayImage &image, double row, double col) {
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const double fr = row - r0;
  const double fc = col - c0;
  auto px = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= image.rows || c >= image.cols)
      return 0.0;
    return image.at(r, c);
  };
  return (1 - fr) * ((1 - fc) * px(r0, c0) + fc * px(r0, c0 + 1)) +
         fr * ((1 - fc) * px(r0 + 1, c0) + fc * px(r0 + 1, c0 + 1));
}

TargetScene rasterize_binary_image(const GrayImage &image, double eps_r, double sigma,
                                   const RoiGrid &grid, const EmRanges &ranges,
                                   const RasterOptions &opts) {
  ranges.validate();
  if (!ranges.contains(eps_r, sigma))
    throw InvalidArgument("rasterize_binary_image: material (" + std::to_string(eps_r) + ", " +
                          std::to_string(sigma) + ") outside the configured EM ranges");
  if (image.rows < 1 || image.cols < 1)
    throw InvalidArgument("rasterize_binary_image: empty image");
  if (!(opts.fill_fraction > 0.0 && opts.fill_fraction <= 1.0))
    throw InvalidArgument("rasterize_binary_image: fill_fraction must be in (0, 1]");

  auto scene = TargetScene::empty(grid);
  const double box = opts.fill_fraction * grid.side_length();
  for (int m = 0; m < grid.num_pixels(); ++m) {
    const Vec2 p = grid.pixel_center(m);
    // Image pixel (r, c) covers [c, c+1) x [r, r+1) in image units; its value
    // sits at the center (r + 0.5, c + 0.5).
    const double col = (p.x + 0.5 * box) / box * image.cols - 0.5;
    const double row = (0.5 * box - p.y) / box * image.rows - 0.5;
    if (sample_bilinear(image, row, col) > opts.threshold) {
      scene.eps_r[static_cast<std::size_t>(m)] = eps_r;
      scene.sigma[static_cast<std::size_t>(m)] = sigma;
    }
  }
  if (scene.foreground_count() == 0)
    throw DegenerateScene("rasterize_binary_image: no foreground after thresholding");
  return scene;
}

bool Shape::contains(Vec2 p) const {
  const Vec2 d = p - center;
  if (kind == ShapeKind::Circle)
    return d.x * d.x + d.y * d.y <= 0.25 * width * width;
  return std::abs(d.x) <= 0.5 * width && std::abs(d.y) <= 0.5 * height;
}

double Shape::bounding_radius() const {
  return kind == ShapeKind::Circle ? 0.5 * width : 0.5 * std::hypot(width, height);
}

std::vector<Shape> place_objects(Rng &rng, const RoiGrid &grid, const MultiObjRanges &ranges) {
  ranges.em.validate();
  if (ranges.min_objects < 1 || ranges.max_objects < ranges.min_objects)
    throw InvalidArgument("place_objects: invalid object count range");
  if (!(ranges.min_size > 0.0) || ranges.max_size < ranges.min_size)
    throw InvalidArgument("place_objects: invalid size range");

  const int count = uniform_int(rng, ranges.min_objects, ranges.max_objects);
  const double half = 0.5 * grid.side_length();
  std::vector<Shape> shapes;
  for (int i = 0; i < count; ++i) {
    Shape s;
    s.kind = uniform(rng, 0.0, 1.0) < 0.5 ? ShapeKind::Circle : ShapeKind::Rectangle;
    s.width = uniform(rng, ranges.min_size, ranges.max_size);
    s.height = s.kind == ShapeKind::Circle ? s.width : uniform(rng, ranges.min_size, ranges.max_size);
    s.eps_r = uniform(rng, ranges.em.eps_min, ranges.em.eps_max);
    s.sigma = uniform(rng, ranges.em.sigma_min, ranges.em.sigma_max);
    const double hx = 0.5 * s.width;
    const double hy = 0.5 * s.height;
    if (hx > half || hy > half)
      throw DegenerateScene("place_objects: object larger than the RoI");
    bool placed = false;
    for (int attempt = 0; attempt < ranges.max_retries && !placed; ++attempt) {
      s.center = {uniform(rng, -half + hx, half - hx), uniform(rng, -half + hy, half - hy)};
      placed = true;
      for (const auto &o : shapes)
        if (norm(o.center - s.center) < o.bounding_radius() + s.bounding_radius()) {
          placed = false;
          break;
        }
    }
    if (!placed)
      throw DegenerateScene("place_objects: could not place object " + std::to_string(i) + " after " +
                            std::to_string(ranges.max_retries) + " attempts");
    shapes.push_back(s);
  }
  return shapes;
}

TargetScene rasterize_shapes(const std::vector<Shape> &shapes, const RoiGrid &grid) {
  auto scene = TargetScene::empty(grid);
  for (int m = 0; m < grid.num_pixels(); ++m) {
    const Vec2 p = grid.pixel_center(m);
    for (const auto &s : shapes)
      if (s.contains(p)) {
        scene.eps_r[static_cast<std::size_t>(m)] = s.eps_r;
        scene.sigma[static_cast<std::size_t>(m)] = s.sigma;
        break;
      }
  }
  return scene;
}

TargetScene gen_multi_obj(Rng &rng, const RoiGrid &grid, const MultiObjRanges &ranges) {
  auto scene = rasterize_shapes(place_objects(rng, grid, ranges), grid);
  if (scene.foreground_count() == 0)
    throw DegenerateScene("gen_multi_obj: objects smaller than one pixel");
  return scene;
}

TargetScene rasterize_disk_coverage(const RoiGrid &grid, Vec2 center, double radius, double eps_r,
                                    double sigma, int supersample) {
  if (supersample < 1 || !(radius > 0.0))
    throw InvalidArgument("rasterize_disk_coverage: invalid radius or supersampling");
  auto scene = TargetScene::empty(grid);
  const double s = grid.pixel_side();
  const double r2 = radius * radius;
  for (int m = 0; m < grid.num_pixels(); ++m) {
    const Vec2 p = grid.pixel_center(m);
    int hits = 0;
    for (int a = 0; a < supersample; ++a)
      for (int b = 0; b < supersample; ++b) {
        const double x = p.x + ((a + 0.5) / supersample - 0.5) * s - center.x;
        const double y = p.y + ((b + 0.5) / supersample - 0.5) * s - center.y;
        hits += (x * x + y * y <= r2) ? 1 : 0;
      }
    const double f = static_cast<double>(hits) / (supersample * supersample);
    scene.eps_r[static_cast<std::size_t>(m)] = 1.0 + f * (eps_r - 1.0);
    scene.sigma[static_cast<std::size_t>(m)] = f * sigma;
  }
  return scene;
}

std::vector<ClutterDisk> gen_clutter(Rng &rng, int count, const ClutterRanges &ranges) {
  if (count < 0)
    throw InvalidArgument("gen_clutter: count must be >= 0");
  ranges.em.validate();
  std::vector<ClutterDisk> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double sx = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    const double sy = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    ClutterDisk d;
    d.center = {sx * uniform(rng, ranges.band_min, ranges.band_max),
                sy * uniform(rng, ranges.band_min, ranges.band_max)};
    d.diameter = ranges.diameter;
    d.eps_r = uniform(rng, ranges.em.eps_min, ranges.em.eps_max);
    d.sigma = uniform(rng, ranges.em.sigma_min, ranges.em.sigma_max);
    out.push_back(d);
  }
  return out;
}

ViewLayout sample_view_layout(Rng &rng, int num_bs, int num_ue, const LayoutRanges &ranges) {
  if (num_bs < 1 || num_bs > ranges.max_bs || num_ue < 1 || num_ue > ranges.max_ue)
    throw InvalidArgument("sample_view_layout: view counts out of range (B=" + std::to_string(num_bs) +
                          ", U=" + std::to_string(num_ue) + ")");
  ViewLayout l;
  l.bs_array_antennas = ranges.bs_array_antennas;
  l.element_spacing = ranges.element_spacing;
  for (int b = 0; b < num_bs; ++b) {
    const double r = uniform(rng, ranges.bs_radius_min, ranges.bs_radius_max);
    const double a = uniform(rng, 0.0, 2.0 * kPi);
    l.bs_positions.push_back({r * std::cos(a), r * std::sin(a)});
  }
  for (int u = 0; u < num_ue; ++u) {
    const double r = uniform(rng, ranges.ue_radius_min, ranges.ue_radius_max);
    const double a = uniform(rng, 0.0, 2.0 * kPi);
    l.ue_positions.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return l;
}

} // namespace mvsense
