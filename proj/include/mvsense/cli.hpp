#pragma once

#include "mvsense/dataset.hpp"
#include "mvsense/inversion.hpp"
#include "mvsense/metrics.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mvsense::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRun = 3;

/// Environment variable naming the default output root. A command without
/// --out writes to $MVSENSE_OUTPUT_ROOT/<command>.
inline constexpr const char *kOutputRootEnv = "MVSENSE_OUTPUT_ROOT";

/// Applies "a.b.c=value" to a JSON tree. The value is parsed as JSON when
/// possible and kept as a string otherwise. Throws InvalidArgument on a
/// malformed override or a path through a non-object.
void apply_override(nlohmann::json &tree, const std::string &assignment);

/// "BxU" to (B, U).
std::pair<int, int> parse_views(const std::string &text);

struct ReconstructConfig {
  std::filesystem::path dataset;
  std::string method = "both"; // bim, bim-cs or both
  std::string split = "test";  // train, val, test or all
  int limit = 0;               // 0 = whole split
  std::optional<std::pair<int, int>> views; // leading (B, U) of each sample
  bool noiseless = false;      // use the exact CSI and skip the link
  bool use_stored_ls = false;  // use csi_ls.bin from the dataset
  double snr_db = 20.0;
  int pilots = 32;
  bool radar = false;
  std::uint64_t seed = 0;
  int points = 0; // reconstructed cloud size; 0 = dataset point count
  int workers = 1;
  BimConfig bim;

  std::vector<BimVariant> variants() const;
  void validate() const;
  static ReconstructConfig from_json(const nlohmann::json &j);
  nlohmann::json to_json() const;
};

struct ReconstructFailure {
  int index = 0;
  std::string method;
  std::string error;
};

struct ReconstructReport {
  std::vector<EvalRecord> records; // sorted by sample, then method
  std::vector<ReconstructFailure> failures;
};

/// Runs BIM over a dataset split and writes, under `out_dir`:
///   samples/NNNNNN/<method>_eps_r.bin, <method>_sigma.bin  [res, res]
///   samples/NNNNNN/<method>_points.bin                     normalized [M, 4]
///   samples/NNNNNN/<method>.json                           residuals, weights, steps
///   records.csv, reconstruct.json
/// Per-sample failures are logged to `log` and skipped. Everything except
/// the runtime_s column of records.csv is a function of the inputs and the
/// config.
ReconstructReport reconstruct_dataset(const ReconstructConfig &cfg, const std::filesystem::path &out_dir,
                                      std::ostream &log);

struct EvalConfig {
  std::vector<std::filesystem::path> records;
  std::filesystem::path predictions; // optional NNNNNN.bin directory
  std::string prediction_method = "gen-mv";
  std::filesystem::path dataset;     // needed with predictions or latents
  std::string split = "test";
  std::optional<std::pair<int, int>> prediction_views; // default: dataset (B, U)
  std::filesystem::path latents;     // optional latent table
  std::vector<std::pair<int, int>> grid_views = kTableViewConfigs;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Chamfer records of predicted clouds against the dataset ground truth, in
/// the dataset's normalized coordinates.
std::vector<EvalRecord> prediction_records(const std::filesystem::path &dataset_dir, const DatasetManifest &m,
                                           const std::filesystem::path &predictions, const std::string &method,
                                           std::pair<int, int> views);

/// Merges record CSVs and prediction directories, then writes records.csv,
/// cdf.csv and summary.json under `out_dir`. Throws std::runtime_error when
/// there is nothing to evaluate.
nlohmann::json evaluate(const EvalConfig &cfg, const std::filesystem::path &out_dir, std::ostream &log);

/// Entry point behind the mvsense executable; returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace mvsense::cli
