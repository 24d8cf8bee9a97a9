#pragma once

#include "mvsense/common.hpp"

#include <vector>

namespace mvsense {

/// BS and UE placement for one scene. Each BS carries a uniform linear array
/// centered on its position whose normal points at the origin.
struct ViewLayout {
  std::vector<Vec2> bs_positions;
  std::vector<Vec2> ue_positions;
  int bs_array_antennas = 4;
  double element_spacing = 0.05; // m; half the center wavelength by default

  int num_bs() const { return static_cast<int>(bs_positions.size()); }
  int num_ue() const { return static_cast<int>(ue_positions.size()); }

  /// Antenna element positions of BS b, ordered along the array axis.
  std::vector<Vec2> antenna_positions(int b) const;

  /// Keeps the first `num_bs` base stations and the first `num_ue` UEs.
  ViewLayout truncated(int num_bs, int num_ue) const;

  void validate() const;
};

/// Elements of an n-element ULA with the given spacing, centered at `center`,
/// with the array axis perpendicular to the direction from `center` to the
/// origin.
std::vector<Vec2> ula_positions(Vec2 center, int n, double spacing);

} // namespace mvsense
