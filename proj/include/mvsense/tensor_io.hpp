#pragma once

#include "mvsense/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mvsense {

/// Raw tensor files: a 16-byte little-endian header followed by the
/// row-major payload.
///
///   offset 0   char[4]   magic "MVTS"
///   offset 4   uint16    dtype code (DType)
///   offset 6   uint16    rank (0..4)
///   offset 8   uint16[4] dims; entries past `rank` are 0
///
/// Complex values are stored as interleaved (real, imag) pairs.
enum class DType : std::uint16_t {
  Float32 = 1,
  Float64 = 2,
  Complex64 = 3,
  Complex128 = 4,
  Int32 = 5,
  UInt8 = 6,
  Int64 = 7,
};

inline constexpr std::size_t kTensorHeaderBytes = 16;
inline constexpr int kTensorMaxRank = 4;

std::size_t dtype_size(DType t);
const char *dtype_name(DType t);

struct Tensor {
  DType dtype = DType::Float64;
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> bytes;

  std::size_t num_elements() const;
};

void write_tensor(const std::filesystem::path &path, const Tensor &t);
Tensor read_tensor(const std::filesystem::path &path);

void write_f64(const std::filesystem::path &path, std::vector<std::size_t> dims, std::span<const double> data);
void write_c128(const std::filesystem::path &path, std::vector<std::size_t> dims, std::span<const cdouble> data);

/// Real payload as doubles; Float32, Float64, Int32, Int64 and UInt8 are accepted.
std::vector<double> tensor_as_f64(const Tensor &t);
/// Complex payload as complex<double>; Complex64 and Complex128 are accepted.
std::vector<cdouble> tensor_as_c128(const Tensor &t);

} // namespace mvsense
