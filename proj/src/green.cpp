#include "mvsense/green.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace mvsense {

cdouble hankel1_0(double x) {
  return {boost::math::cyl_bessel_j(0, x), boost::math::cyl_neumann(0, x)};
}

cdouble hankel1_1(double x) {
  return {boost::math::cyl_bessel_j(1, x), boost::math::cyl_neumann(1, x)};
}

GreenKernel::GreenKernel(double pixel_side, double k, int max_offset)
    : k_(k), a_(pixel_side / std::sqrt(kPi)), max_offset_(max_offset) {
  if (!(pixel_side > 0.0) || !(k > 0.0) || max_offset < 0)
    throw InvalidArgument("GreenKernel: invalid pixel side, wavenumber or offset range");
  const cdouble pre = kJ * (k * kPi * a_ / 2.0);
  weight_ = pre * boost::math::cyl_bessel_j(1, k * a_);
  self_ = pre * hankel1_1(k * a_) - 1.0;

  const auto w = static_cast<std::size_t>(max_offset + 1);
  table_.assign(w * w, cdouble{});
  for (int dx = 0; dx <= max_offset; ++dx) {
    for (int dy = 0; dy <= dx; ++dy) {
      if (dx == 0 && dy == 0)
        continue;
      const double d = pixel_side * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
      const cdouble v = weight_ * hankel1_0(k * d);
      table_[static_cast<std::size_t>(dx) * w + static_cast<std::size_t>(dy)] = v;
      table_[static_cast<std::size_t>(dy) * w + static_cast<std::size_t>(dx)] = v;
    }
  }
}

cdouble GreenKernel::operator()(LatticeCell a, LatticeCell b) const {
  const int dx = std::abs(a.ix - b.ix);
  const int dy = std::abs(a.iy - b.iy);
  if (dx == 0 && dy == 0)
    return self_;
  if (dx > max_offset_ || dy > max_offset_)
    throw InvalidArgument("GreenKernel: lattice offset beyond tabulated range");
  return table_[static_cast<std::size_t>(dx) * static_cast<std::size_t>(max_offset_ + 1) +
                static_cast<std::size_t>(dy)];
}

CMat GreenKernel::block(std::span<const LatticeCell> rows, std::span<const LatticeCell> cols) const {
  CMat g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(rows[i], cols[j]);
  return g;
}

int max_lattice_offset(std::span<const LatticeCell> cells) {
  if (cells.empty())
    return 0;
  int x0 = cells[0].ix, x1 = x0, y0 = cells[0].iy, y1 = y0;
  for (const auto &c : cells) {
    x0 = std::min(x0, c.ix);
    x1 = std::max(x1, c.ix);
    y0 = std::min(y0, c.iy);
    y1 = std::max(y1, c.iy);
  }
  return std::max(x1 - x0, y1 - y0);
}

GreenOperator green_matrix(const RoiGrid &grid, double frequency, const PhysicsConfig &cfg,
                           int frequency_index) {
  const double k = wavenumber(frequency, cfg);
  std::vector<LatticeCell> cells;
  cells.reserve(static_cast<std::size_t>(grid.num_pixels()));
  for (int m = 0; m < grid.num_pixels(); ++m)
    cells.push_back(grid.lattice_cell(m));
  const GreenKernel kernel(grid.pixel_side(), k, grid.resolution() - 1);
  return {frequency_index, frequency, k, kernel.block(cells, cells)};
}

CVec incident_field_at(std::span<const Vec2> points, Vec2 source, double k, double eta) {
  // j k eta * (j/4) H0 = -(k eta / 4) H0
  const double pre = -k * eta / 4.0;
  CVec h(static_cast<Eigen::Index>(points.size()));
  for (std::size_t m = 0; m < points.size(); ++m) {
    const double d = norm(points[m] - source);
    if (d == 0.0)
      throw InvalidArgument("incident_field_at: evaluation point coincides with the source");
    h[static_cast<Eigen::Index>(m)] = pre * hankel1_0(k * d);
  }
  return h;
}

CVec incident_channel(const RoiGrid &grid, Vec2 ue, double frequency, const PhysicsConfig &cfg) {
  if (grid.contains(ue))
    throw InvalidArgument("incident_channel: UE inside the RoI is not supported");
  const auto centers = grid.pixel_centers();
  return incident_field_at(centers, ue, wavenumber(frequency, cfg), cfg.impedance());
}

CMat receive_kernel_at(std::span<const Vec2> receivers, std::span<const Vec2> points, double k,
                       cdouble weight) {
  CMat h(static_cast<Eigen::Index>(receivers.size()), static_cast<Eigen::Index>(points.size()));
  for (std::size_t m = 0; m < points.size(); ++m) {
    for (std::size_t r = 0; r < receivers.size(); ++r) {
      const double d = norm(receivers[r] - points[m]);
      if (d == 0.0)
        throw InvalidArgument("receive_kernel_at: receiver coincides with a pixel center");
      h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = weight * hankel1_0(k * d);
    }
  }
  return h;
}

CMat rx_channel(const RoiGrid &grid, const ViewLayout &layout, int b, double frequency,
                const PhysicsConfig &cfg) {
  const auto antennas = layout.antenna_positions(b);
  for (const auto &p : antennas)
    if (grid.contains(p))
      throw InvalidArgument("rx_channel: antenna inside the RoI");
  const double k = wavenumber(frequency, cfg);
  const double a = grid.equivalent_radius();
  const cdouble weight = kJ * (k * kPi * a / 2.0) * boost::math::cyl_bessel_j(1, k * a);
  const auto centers = grid.pixel_centers();
  return receive_kernel_at(antennas, centers, k, weight);
}

} // namespace mvsense
