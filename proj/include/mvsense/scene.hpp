#pragma once

#include "mvsense/common.hpp"
#include "mvsense/grid.hpp"
#include "mvsense/physics.hpp"

#include <vector>

namespace mvsense {

/// A circular scatterer placed outside the RoI.
struct ClutterDisk {
  Vec2 center;
  double diameter = 0.05;
  double eps_r = 1.0;
  double sigma = 0.0;
};

/// Pixelized material map of the RoI plus optional clutter outside it.
struct TargetScene {
  RoiGrid grid;
  std::vector<double> eps_r; // per RoI pixel, >= 1
  std::vector<double> sigma; // per RoI pixel, S/m, >= 0
  std::vector<ClutterDisk> clutter;

  /// Background-only scene on `grid`.
  static TargetScene empty(const RoiGrid &grid);

  bool is_background(int m) const { return eps_r[m] == 1.0 && sigma[m] == 0.0; }
  int foreground_count() const;
  /// Throws InvalidArgument when sizes mismatch or materials are unphysical.
  void validate() const;
};

/// One lattice cell carrying material, either an RoI pixel or a clutter cell.
struct ScatterCell {
  LatticeCell cell;
  double eps_r = 1.0;
  double sigma = 0.0;
  int roi_index = -1; // pixel index for RoI cells, -1 for clutter
};

/// Every cell of the enlarged discretization domain whose material differs
/// from free space. RoI cells come first in pixel order, then clutter cells.
std::vector<ScatterCell> scattering_cells(const TargetScene &scene);

/// Lattice cells outside the RoI whose centers fall inside some clutter disk.
/// A cell covered by several disks takes the first one.
std::vector<ScatterCell> clutter_cells(const TargetScene &scene);

/// Contrast over the RoI pixels at frequency f.
CVec contrast(const TargetScene &scene, double frequency, const PhysicsConfig &cfg);

} // namespace mvsense
