#include "mvsense/point_cloud.hpp"

#include <cmath>
#include <iostream>

namespace mvsense {

Point4 NormStats::normalize(const Point4 &p) const {
  Point4 q;
  for (int i = 0; i < 4; ++i)
    q[i] = (p[i] - mean[i]) / std[i];
  return q;
}

Point4 NormStats::denormalize(const Point4 &p) const {
  Point4 q;
  for (int i = 0; i < 4; ++i)
    q[i] = p[i] * std[i] + mean[i];
  return q;
}

PointCloud NormStats::normalize(const PointCloud &raw) const {
  PointCloud out;
  out.points.reserve(raw.size());
  for (const auto &p : raw.points)
    out.points.push_back(normalize(p));
  return out;
}

PointCloud NormStats::denormalize(const PointCloud &normalized) const {
  PointCloud out;
  out.points.reserve(normalized.size());
  for (const auto &p : normalized.points)
    out.points.push_back(denormalize(p));
  return out;
}

PointCloud sample_masked_points(const TargetScene &scene, const std::vector<bool> &mask, int count, Rng &rng) {
  if (count < 1)
    throw InvalidArgument("sample_masked_points: count must be >= 1");
  if (static_cast<int>(mask.size()) != scene.grid.num_pixels())
    throw InvalidArgument("sample_masked_points: mask size differs from the grid");
  std::vector<int> fg;
  for (int m = 0; m < scene.grid.num_pixels(); ++m)
    if (mask[static_cast<std::size_t>(m)])
      fg.push_back(m);
  if (fg.empty())
    throw DegenerateScene("sample_masked_points: empty pixel mask");

  const double s = scene.grid.pixel_side();
  std::uniform_int_distribution<std::size_t> pick(0, fg.size() - 1);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int m = fg[pick(rng)];
    const Vec2 c = scene.grid.pixel_center(m);
    const double dx = jitter(rng);
    const double dy = jitter(rng);
    cloud.points.push_back({c.x + dx * s, c.y + dy * s, scene.eps_r[static_cast<std::size_t>(m)],
                            scene.sigma[static_cast<std::size_t>(m)]});
  }
  return cloud;
}

PointCloud sample_scene_points(const TargetScene &scene, int count, Rng &rng) {
  std::vector<bool> mask(static_cast<std::size_t>(scene.grid.num_pixels()));
  for (int m = 0; m < scene.grid.num_pixels(); ++m)
    mask[static_cast<std::size_t>(m)] = !scene.is_background(m);
  if (count >= 1 && scene.foreground_count() == 0)
    throw DegenerateScene("sample_scene_points: scene has no foreground pixels");
  return sample_masked_points(scene, mask, count, rng);
}

PointCloud scene_to_point_cloud(const TargetScene &scene, int count, const NormStats &stats, Rng &rng) {
  return stats.normalize(sample_scene_points(scene, count, rng));
}

NormStatsResult compute_norm_stats(std::span<const PointCloud> raw_clouds, double min_std) {
  if (raw_clouds.size() < 2)
    throw InvalidArgument("compute_norm_stats: need at least 2 training clouds");
  std::array<double, 4> sum{}, sq{};
  double n = 0.0;
  for (const auto &c : raw_clouds)
    for (const auto &p : c.points) {
      for (int i = 0; i < 4; ++i)
        sum[i] += p[i];
      n += 1.0;
    }
  if (n == 0.0)
    throw InvalidArgument("compute_norm_stats: clouds are empty");
  NormStatsResult out;
  for (int i = 0; i < 4; ++i)
    out.stats.mean[i] = sum[i] / n;
  // Second pass around the mean for accuracy.
  for (const auto &c : raw_clouds)
    for (const auto &p : c.points)
      for (int i = 0; i < 4; ++i) {
        const double d = p[i] - out.stats.mean[i];
        sq[i] += d * d;
      }
  static const char *names[4] = {"x", "y", "eps_r", "sigma"};
  for (int i = 0; i < 4; ++i) {
    const double sd = std::sqrt(sq[i] / n);
    if (sd < min_std) {
      std::cerr << "warning: zero variance in point dimension '" << names[i]
                << "'; std inflated to " << min_std << "\n";
      out.stats.std[i] = min_std;
      out.inflated[i] = true;
    } else {
      out.stats.std[i] = sd;
    }
  }
  return out;
}

} // namespace mvsense
