#pragma once

#include "mvsense/random.hpp"
#include "mvsense/scene.hpp"

#include <array>
#include <span>
#include <vector>

namespace mvsense {

using Point4 = std::array<double, 4>; // x, y, eps_r, sigma

/// Shape-EM point cloud. Whether the coordinates are raw or normalized is
/// tracked by the caller; the dataset stores normalized clouds.
struct PointCloud {
  std::vector<Point4> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Per-dimension affine normalization (x - mean) / std.
struct NormStats {
  Point4 mean{0.0, 0.0, 0.0, 0.0};
  Point4 std{1.0, 1.0, 1.0, 1.0};

  Point4 normalize(const Point4 &p) const;
  Point4 denormalize(const Point4 &p) const;
  PointCloud normalize(const PointCloud &raw) const;
  PointCloud denormalize(const PointCloud &normalized) const;
};

/// Draws `count` raw points uniformly over the foreground pixel area of the
/// RoI (uniform pixel choice, uniform jitter inside the pixel). Each point
/// carries its pixel's material. Clutter is not sampled.
PointCloud sample_scene_points(const TargetScene &scene, int count, Rng &rng);

/// Same sampling restricted to the pixels selected by `mask`, whatever their
/// material. Throws DegenerateScene for an empty mask.
PointCloud sample_masked_points(const TargetScene &scene, const std::vector<bool> &mask, int count, Rng &rng);

/// sample_scene_points followed by normalization.
PointCloud scene_to_point_cloud(const TargetScene &scene, int count, const NormStats &stats, Rng &rng);

struct NormStatsResult {
  NormStats stats;
  std::array<bool, 4> inflated{false, false, false, false};
};

/// Mean and population standard deviation over every point of every raw
/// cloud. A dimension whose std falls below `min_std` is set to `min_std`
/// and flagged (a warning is printed to stderr).
NormStatsResult compute_norm_stats(std::span<const PointCloud> raw_clouds, double min_std = 1e-6);

} // namespace mvsense
