#include "mvsense/layout.hpp"

#include <cmath>

namespace mvsense {

std::vector<Vec2> ula_positions(Vec2 center, int n, double spacing) {
  const double r = norm(center);
  if (r == 0.0)
    throw InvalidArgument("ula_positions: array centered at the origin has no defined normal");
  // Axis is the normal (toward origin) rotated by 90 degrees.
  const Vec2 axis{center.y / r, -center.x / r};
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double offset = (i - 0.5 * (n - 1)) * spacing;
    out.push_back(center + offset * axis);
  }
  return out;
}

std::vector<Vec2> ViewLayout::antenna_positions(int b) const {
  return ula_positions(bs_positions.at(static_cast<std::size_t>(b)), bs_array_antennas, element_spacing);
}

ViewLayout ViewLayout::truncated(int nb, int nu) const {
  if (nb < 1 || nb > num_bs() || nu < 1 || nu > num_ue())
    throw InvalidArgument("ViewLayout::truncated: requested views exceed layout");
  ViewLayout out = *this;
  out.bs_positions.resize(static_cast<std::size_t>(nb));
  out.ue_positions.resize(static_cast<std::size_t>(nu));
  return out;
}

void ViewLayout::validate() const {
  if (bs_positions.empty() || ue_positions.empty())
    throw InvalidArgument("ViewLayout: need at least one BS and one UE");
  if (bs_array_antennas < 1)
    throw InvalidArgument("ViewLayout: bs_array_antennas must be >= 1");
  if (!(element_spacing > 0.0))
    throw InvalidArgument("ViewLayout: element_spacing must be positive");
}

} // namespace mvsense
