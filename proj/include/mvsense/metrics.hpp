#pragma once

#include "mvsense/point_cloud.hpp"

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvsense {

struct KMeansResult {
  std::vector<bool> mask; // true for the higher-centroid cluster
  double low_centroid = 0.0;
  double high_centroid = 0.0;
  int iterations = 0;
  bool degenerate = false; // constant input, mask left empty
};

/// 1-D K-means with K = 2, centroids initialized at the minimum and maximum
/// and iterated to a fixed point. Ties go to the low cluster.
KMeansResult kmeans2(std::span<const double> values);

/// Per-pixel magnitude sqrt(x1^2 + x2^2) of the unknowns
/// x1 = eps_r - 1, x2 = sigma / (2 pi f_c eps0).
std::vector<double> contrast_magnitude(const TargetScene &scene, const PhysicsConfig &cfg);

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance from
/// a to b plus the same from b to a. Nearest neighbours come from a k-d tree;
/// the result is bit-identical to an exhaustive scan that sums in point order.
double chamfer(const PointCloud &a, const PointCloud &b);

/// Reported log-CD for a zero distance.
inline constexpr double kZeroCdSentinel = -std::numeric_limits<double>::infinity();

/// 10 log10(cd); zero maps to kZeroCdSentinel. Throws on negative or NaN input.
double log_cd(double cd);

/// Point cloud of a pixel reconstruction: K-means mask over the contrast
/// magnitude, then uniform points over the masked pixels carrying their
/// reconstructed materials. A degenerate (constant) image selects every pixel.
struct ReconstructionCloud {
  PointCloud raw;
  KMeansResult kmeans;
};

ReconstructionCloud reconstruction_cloud(const TargetScene &recon, const PhysicsConfig &cfg, int count, Rng &rng);

struct EvalRecord {
  std::string sample_id;
  std::string method;
  double log_cd = 0.0; // dB, kZeroCdSentinel when the distance is zero
  bool zero_cd = false;
  double runtime_s = 0.0;
  int num_bs = 0;
  int num_ue = 0;
  double snr_db = std::numeric_limits<double>::infinity(); // infinity = noiseless
};

void write_records_csv(const std::filesystem::path &path, const std::vector<EvalRecord> &records);
std::vector<EvalRecord> read_records_csv(const std::filesystem::path &path);

struct CdfPoint {
  double value = 0.0;
  double probability = 0.0;
};

struct MethodSummary {
  std::string method;
  std::size_t count = 0;
  std::size_t zero_cd_count = 0;
  double mean_db = 0.0;        // arithmetic mean of finite log-CD values
  double mean_linear_db = 0.0; // 10 log10 of the mean linear CD
  double median_db = 0.0;
  double q1_db = 0.0;
  double q3_db = 0.0;
  std::vector<CdfPoint> cdf; // sorted, step CDF over every record
};

/// Per-method summaries sorted by method name. Throws InvalidArgument when
/// `records` is empty.
std::vector<MethodSummary> aggregate(const std::vector<EvalRecord> &records);

/// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct ViewGridCell {
  std::string method;
  int num_bs = 0;
  int num_ue = 0;
  std::size_t count = 0;
  double mean_db = std::numeric_limits<double>::quiet_NaN(); // NaN when no record matches
};

inline const std::vector<std::pair<int, int>> kTableViewConfigs = {{4, 8}, {8, 16}, {16, 32}};

/// Mean log-CD per (method, B, U) over the requested view configurations.
std::vector<ViewGridCell> view_grid(const std::vector<EvalRecord> &records,
                                    const std::vector<std::pair<int, int>> &configs = kTableViewConfigs);

void write_cdf_csv(const std::filesystem::path &path, const std::vector<MethodSummary> &summaries);
void write_summary_json(const std::filesystem::path &path, const std::vector<MethodSummary> &summaries,
                        const std::vector<ViewGridCell> &grid);

} // namespace mvsense
