#include "mvsense/scene.hpp"

#include <cmath>
#include <set>
#include <utility>

namespace mvsense {

TargetScene TargetScene::empty(const RoiGrid &grid) {
  TargetScene s;
  s.grid = grid;
  s.eps_r.assign(static_cast<std::size_t>(grid.num_pixels()), 1.0);
  s.sigma.assign(static_cast<std::size_t>(grid.num_pixels()), 0.0);
  return s;
}

int TargetScene::foreground_count() const {
  int n = 0;
  for (int m = 0; m < grid.num_pixels(); ++m)
    n += is_background(m) ? 0 : 1;
  return n;
}

void TargetScene::validate() const {
  const auto d = static_cast<std::size_t>(grid.num_pixels());
  if (eps_r.size() != d || sigma.size() != d)
    throw InvalidArgument("TargetScene: material arrays do not match the grid");
  for (std::size_t m = 0; m < d; ++m) {
    if (!std::isfinite(eps_r[m]) || eps_r[m] < 1.0)
      throw InvalidArgument("TargetScene: eps_r < 1 at pixel " + std::to_string(m));
    if (!std::isfinite(sigma[m]) || sigma[m] < 0.0)
      throw InvalidArgument("TargetScene: sigma < 0 at pixel " + std::to_string(m));
  }
  for (const auto &c : clutter) {
    if (c.eps_r < 1.0 || c.sigma < 0.0 || !(c.diameter > 0.0))
      throw InvalidArgument("TargetScene: invalid clutter disk");
  }
}

std::vector<ScatterCell> clutter_cells(const TargetScene &scene) {
  std::vector<ScatterCell> out;
  std::set<std::pair<int, int>> taken;
  const double s = scene.grid.pixel_side();
  const double h = 0.5 * scene.grid.side_length();
  for (const auto &disk : scene.clutter) {
    const double r = 0.5 * disk.diameter;
    const int ix0 = static_cast<int>(std::ceil((disk.center.x - r + h) / s - 0.5));
    const int ix1 = static_cast<int>(std::floor((disk.center.x + r + h) / s - 0.5));
    const int iy0 = static_cast<int>(std::ceil((disk.center.y - r + h) / s - 0.5));
    const int iy1 = static_cast<int>(std::floor((disk.center.y + r + h) / s - 0.5));
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        const LatticeCell cell{ix, iy};
        const Vec2 p = scene.grid.cell_center(cell);
        const double dx = p.x - disk.center.x;
        const double dy = p.y - disk.center.y;
        if (dx * dx + dy * dy > r * r || scene.grid.contains(p))
          continue;
        if (!taken.insert({ix, iy}).second)
          continue;
        out.push_back({cell, disk.eps_r, disk.sigma, -1});
      }
    }
  }
  return out;
}

std::vector<ScatterCell> scattering_cells(const TargetScene &scene) {
  std::vector<ScatterCell> out;
  for (int m = 0; m < scene.grid.num_pixels(); ++m) {
    if (scene.is_background(m))
      continue;
    out.push_back({scene.grid.lattice_cell(m), scene.eps_r[static_cast<std::size_t>(m)],
                   scene.sigma[static_cast<std::size_t>(m)], m});
  }
  auto extra = clutter_cells(scene);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

CVec contrast(const TargetScene &scene, double frequency, const PhysicsConfig &cfg) {
  CVec chi(scene.grid.num_pixels());
  for (int m = 0; m < scene.grid.num_pixels(); ++m)
    chi[m] = pixel_contrast(scene.eps_r[static_cast<std::size_t>(m)],
                            scene.sigma[static_cast<std::size_t>(m)], frequency, cfg);
  return chi;
}

} // namespace mvsense
