#pragma once

#include "mvsense/common.hpp"

#include <vector>

namespace mvsense {

/// Integer coordinates on the square lattice that carries the RoI pixels.
/// Cell (ix, iy) has its center at (-L/2 + (ix + 0.5) s, -L/2 + (iy + 0.5) s).
/// RoI pixels occupy 0 <= ix, iy < resolution; clutter cells live on the same
/// lattice outside that range.
struct LatticeCell {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const LatticeCell &, const LatticeCell &) = default;
};

/// Square region of interest centered at the origin, split into
/// resolution x resolution square pixels.
///
/// Pixel index m = row * resolution + col, with row 0 at the top (largest y)
/// and col 0 at the left (smallest x), i.e. ordinary image order.
class RoiGrid {
public:
  RoiGrid() = default;
  RoiGrid(double side_length, int resolution);

  double side_length() const { return side_; }
  int resolution() const { return res_; }
  int num_pixels() const { return res_ * res_; }
  double pixel_side() const { return side_ / res_; }
  /// Radius of the circle with the same area as one pixel: s / sqrt(pi).
  double equivalent_radius() const;

  Vec2 pixel_center(int m) const;
  std::vector<Vec2> pixel_centers() const;
  LatticeCell lattice_cell(int m) const;
  Vec2 cell_center(LatticeCell c) const;
  /// Closed square test: points on the RoI boundary count as inside.
  bool contains(Vec2 p) const;

  friend bool operator==(const RoiGrid &, const RoiGrid &) = default;

private:
  double side_ = 0.5;
  int res_ = 64;
};

} // namespace mvsense
