#pragma once

#include "mvsense/point_cloud.hpp"

#include "mvsense/common.hpp"

#include <filesystem>
#include <map>
#include <vector>

namespace mvsense {

/// Predicted clouds from the learning component: one [M, 4] float tensor per
/// sample, named NNNNNN.bin after the dataset sample index and expressed in
/// the dataset's normalized coordinates.
std::filesystem::path prediction_path(const std::filesystem::path &dir, int index);

/// Every NNNNNN.bin under `dir`, keyed by sample index. Other files are
/// ignored. Throws FormatError when the directory is missing.
std::map<int, PointCloud> load_predictions(const std::filesystem::path &dir);

/// Latent table: one row per sample of a split, columns mu_z (d_z values)
/// followed by the label fields (shape class, eps_r, sigma). Stored as an
/// [N, d_z + 3] tensor.
struct LatentTable {
  RMat mu;
  std::vector<int> shape_class;
  std::vector<double> eps_r;
  std::vector<double> sigma;

  int rows() const { return static_cast<int>(mu.rows()); }
  int latent_dim() const { return static_cast<int>(mu.cols()); }
};

inline constexpr int kLatentLabelColumns = 3;

void write_latent_table(const std::filesystem::path &path, const LatentTable &t);
/// Throws FormatError for a malformed tensor, a table without latent columns
/// or a non-integral shape class.
LatentTable load_latent_table(const std::filesystem::path &path);

} // namespace mvsense
