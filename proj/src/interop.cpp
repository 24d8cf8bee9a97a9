#include "mvsense/interop.hpp"

#include "mvsense/dataset.hpp"
#include "mvsense/tensor_io.hpp"

#include <cmath>
#include <cstdio>

namespace mvsense {

namespace fs = std::filesystem;

fs::path prediction_path(const fs::path &dir, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d.bin", index);
  return dir / buf;
}

std::map<int, PointCloud> load_predictions(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw FormatError("prediction directory " + dir.string() + " does not exist");
  std::map<int, PointCloud> out;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!e.is_regular_file() || name.size() != 10 || e.path().extension() != ".bin")
      continue;
    const auto stem = name.substr(0, 6);
    if (stem.find_first_not_of("0123456789") != std::string::npos)
      continue;
    out.emplace(std::stoi(stem), read_point_cloud(e.path()));
  }
  return out;
}

void write_latent_table(const fs::path &path, const LatentTable &t) {
  const auto n = static_cast<std::size_t>(t.rows());
  const auto dz = static_cast<std::size_t>(t.latent_dim());
  if (t.shape_class.size() != n || t.eps_r.size() != n || t.sigma.size() != n)
    throw InvalidArgument("write_latent_table: label columns do not match the row count");
  const std::size_t cols = dz + kLatentLabelColumns;
  std::vector<double> data(n * cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dz; ++k)
      data[i * cols + k] = t.mu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    data[i * cols + dz] = t.shape_class[i];
    data[i * cols + dz + 1] = t.eps_r[i];
    data[i * cols + dz + 2] = t.sigma[i];
  }
  write_f64(path, {n, cols}, data);
}

LatentTable load_latent_table(const fs::path &path) {
  const auto t = read_tensor(path);
  if (t.dims.size() != 2 || t.dims[1] <= static_cast<std::size_t>(kLatentLabelColumns))
    throw FormatError(path.string() + ": expected a latent table of shape [N, d_z + 3] with d_z >= 1");
  const auto data = tensor_as_f64(t);
  const auto n = t.dims[0], cols = t.dims[1], dz = cols - kLatentLabelColumns;
  LatentTable out;
  out.mu.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dz));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dz; ++k)
      out.mu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = data[i * cols + k];
    const double cls = data[i * cols + dz];
    if (!(std::isfinite(cls) && cls == std::floor(cls)))
      throw FormatError(path.string() + ": shape class in row " + std::to_string(i) + " is not an integer");
    out.shape_class.push_back(static_cast<int>(cls));
    out.eps_r.push_back(data[i * cols + dz + 1]);
    out.sigma.push_back(data[i * cols + dz + 2]);
  }
  return out;
}

} // namespace mvsense
