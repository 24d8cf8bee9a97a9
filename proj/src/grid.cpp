#include "mvsense/grid.hpp"

#include <cmath>

namespace mvsense {

RoiGrid::RoiGrid(double side_length, int resolution) : side_(side_length), res_(resolution) {
  if (!(side_length > 0.0))
    throw InvalidArgument("RoiGrid: side length must be positive");
  if (resolution < 1)
    throw InvalidArgument("RoiGrid: resolution must be >= 1");
}

double RoiGrid::equivalent_radius() const { return pixel_side() / std::sqrt(kPi); }

LatticeCell RoiGrid::lattice_cell(int m) const {
  const int row = m / res_;
  const int col = m % res_;
  return {col, res_ - 1 - row};
}

Vec2 RoiGrid::cell_center(LatticeCell c) const {
  const double s = pixel_side();
  return {-0.5 * side_ + (c.ix + 0.5) * s, -0.5 * side_ + (c.iy + 0.5) * s};
}

Vec2 RoiGrid::pixel_center(int m) const { return cell_center(lattice_cell(m)); }

std::vector<Vec2> RoiGrid::pixel_centers() const {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(num_pixels()));
  for (int m = 0; m < num_pixels(); ++m)
    out.push_back(pixel_center(m));
  return out;
}

bool RoiGrid::contains(Vec2 p) const {
  const double h = 0.5 * side_;
  return std::abs(p.x) <= h && std::abs(p.y) <= h;
}

} // namespace mvsense
