#pragma once

#include "mvsense/generators.hpp"
#include "mvsense/link.hpp"
#include "mvsense/point_cloud.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace mvsense {

inline constexpr int kDatasetFormatVersion = 1;

enum class TargetKind { Mnist, MultiObj };
enum class DigitSource { Procedural, Idx };

struct DatasetConfig {
  std::uint64_t seed = 0;
  int num_samples = 512;
  std::array<int, 3> split_ratio{8, 1, 1}; // train : val : test, contiguous
  PhysicsConfig physics;
  double roi_side = 0.5;
  int grid_resolution = 64;
  int num_bs = 16;
  int num_ue = 32;
  LayoutRanges layout;
  TargetKind target = TargetKind::Mnist;
  EmRanges em;
  RasterOptions raster;
  DigitSource digits = DigitSource::Procedural;
  std::filesystem::path idx_images; // used with DigitSource::Idx
  std::filesystem::path idx_labels;
  MultiObjRanges multi_obj;
  int clutter_min = 0;
  int clutter_max = 0;
  ClutterRanges clutter;
  int num_points = 1000;
  double min_std = 1e-6;
  /// When set, every sample also stores LS-estimated CSI.
  std::optional<PilotConfig> link;
  int workers = 0; // 0 = hardware concurrency

  RoiGrid grid() const { return RoiGrid(roi_side, grid_resolution); }
  void validate() const;

  /// Missing keys keep their defaults; unknown keys are rejected.
  static DatasetConfig from_json(const nlohmann::json &j);
  nlohmann::json to_json() const;
};

struct SplitRanges {
  int train_begin = 0, train_end = 0;
  int val_begin = 0, val_end = 0;
  int test_begin = 0, test_end = 0;

  const char *split_of(int index) const;
  std::pair<int, int> range(const std::string &split) const;
};

/// Contiguous split sizes from the ratio (train and val rounded down, the
/// rest goes to test).
SplitRanges make_splits(int num_samples, const std::array<int, 3> &ratio);

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  DatasetConfig config;
  NormStats norm_stats;
  std::array<bool, 4> inflated{false, false, false, false};
  SplitRanges splits;
};

nlohmann::json manifest_to_json(const DatasetManifest &m);
DatasetManifest manifest_from_json(const nlohmann::json &j);

/// I/O or generation failure tied to one sample.
class DatasetError : public std::runtime_error {
public:
  DatasetError(const std::string &what, int sample_index)
      : std::runtime_error(what), index_(sample_index) {}
  int sample_index() const noexcept { return index_; }

private:
  int index_;
};

/// Everything generated for one sample index, before serialization.
struct GeneratedSample {
  int index = 0;
  TargetScene scene;
  ViewLayout layout;
  ChannelSet channels;
  std::optional<ChannelSet> channels_ls;
  PointCloud raw_points;
  int label = -1; // digit class, -1 for multi-object scenes
};

/// Scene, layout and raw points of sample `index`; depends only on
/// (seed, index) and the config.
GeneratedSample generate_scene(const DatasetConfig &cfg, int index);
/// generate_scene plus forward channels and optional LS estimates.
GeneratedSample generate_sample(const DatasetConfig &cfg, int index);

/// Writes manifest.json and samples/NNNNNN/ under `out_dir`. Normalization
/// statistics come from the training split only.
DatasetManifest build_dataset(const DatasetConfig &cfg, const std::filesystem::path &out_dir);

DatasetManifest load_manifest(const std::filesystem::path &dataset_dir);

struct LoadedSample {
  int index = 0;
  std::string split;
  TargetScene scene;
  ViewLayout layout;
  ChannelSet channels;
  std::optional<ChannelSet> channels_ls;
  PointCloud points; // normalized
  nlohmann::json meta;
};

std::filesystem::path sample_dir(const std::filesystem::path &dataset_dir, int index);
LoadedSample load_sample(const std::filesystem::path &dataset_dir, const DatasetManifest &m, int index);

/// CSI tensor [B*U, N_r, N_c] (view index b * U + u) and back.
void write_channel_set(const std::filesystem::path &path, const ChannelSet &set);
ChannelSet read_channel_set(const std::filesystem::path &path, const ViewLayout &layout);

/// Pretty-printed JSON with a trailing newline; FormatError on I/O failure.
void write_json_file(const std::filesystem::path &path, const nlohmann::json &j);
nlohmann::json read_json_file(const std::filesystem::path &path);

void write_point_cloud(const std::filesystem::path &path, const PointCloud &cloud);
PointCloud read_point_cloud(const std::filesystem::path &path);

} // namespace mvsense
