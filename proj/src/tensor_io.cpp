#include "mvsense/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

namespace mvsense {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'T', 'S'};

template <typename T> T load(const std::uint8_t *p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

} // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
  case DType::Float32: return 4;
  case DType::Float64: return 8;
  case DType::Complex64: return 8;
  case DType::Complex128: return 16;
  case DType::Int32: return 4;
  case DType::UInt8: return 1;
  case DType::Int64: return 8;
  }
  throw FormatError("unknown dtype code " + std::to_string(static_cast<int>(t)));
}

const char *dtype_name(DType t) {
  switch (t) {
  case DType::Float32: return "float32";
  case DType::Float64: return "float64";
  case DType::Complex64: return "complex64";
  case DType::Complex128: return "complex128";
  case DType::Int32: return "int32";
  case DType::UInt8: return "uint8";
  case DType::Int64: return "int64";
  }
  return "unknown";
}

std::size_t Tensor::num_elements() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void write_tensor(const std::filesystem::path &path, const Tensor &t) {
  if (t.dims.size() > static_cast<std::size_t>(kTensorMaxRank))
    throw InvalidArgument("write_tensor: rank above 4 for " + path.string());
  for (auto d : t.dims)
    if (d > 0xFFFF)
      throw InvalidArgument("write_tensor: dimension " + std::to_string(d) + " exceeds 65535 for " +
                            path.string());
  if (t.bytes.size() != t.num_elements() * dtype_size(t.dtype))
    throw InvalidArgument("write_tensor: payload size does not match dims for " + path.string());

  std::uint8_t header[kTensorHeaderBytes] = {};
  std::memcpy(header, kMagic, 4);
  const auto code = static_cast<std::uint16_t>(t.dtype);
  const auto rank = static_cast<std::uint16_t>(t.dims.size());
  std::memcpy(header + 4, &code, 2);
  std::memcpy(header + 6, &rank, 2);
  for (std::size_t i = 0; i < t.dims.size(); ++i) {
    const auto d = static_cast<std::uint16_t>(t.dims[i]);
    std::memcpy(header + 8 + 2 * i, &d, 2);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char *>(header), kTensorHeaderBytes);
  out.write(reinterpret_cast<const char *>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
  if (!out)
    throw FormatError("write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open " + path.string());
  std::uint8_t header[kTensorHeaderBytes];
  in.read(reinterpret_cast<char *>(header), kTensorHeaderBytes);
  if (!in || std::memcmp(header, kMagic, 4) != 0)
    throw FormatError(path.string() + ": missing MVTS tensor header");
  Tensor t;
  t.dtype = static_cast<DType>(load<std::uint16_t>(header + 4));
  const auto rank = load<std::uint16_t>(header + 6);
  if (rank > kTensorMaxRank)
    throw FormatError(path.string() + ": rank " + std::to_string(rank) + " above 4");
  for (int i = 0; i < rank; ++i)
    t.dims.push_back(load<std::uint16_t>(header + 8 + 2 * i));
  const std::size_t n = t.num_elements() * dtype_size(t.dtype);
  t.bytes.resize(n);
  in.read(reinterpret_cast<char *>(t.bytes.data()), static_cast<std::streamsize>(n));
  if (!in)
    throw FormatError(path.string() + ": truncated payload");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(path.string() + ": trailing bytes after payload");
  return t;
}

void write_f64(const std::filesystem::path &path, std::vector<std::size_t> dims, std::span<const double> data) {
  Tensor t{DType::Float64, std::move(dims), {}};
  t.bytes.resize(data.size_bytes());
  std::memcpy(t.bytes.data(), data.data(), data.size_bytes());
  write_tensor(path, t);
}

void write_c128(const std::filesystem::path &path, std::vector<std::size_t> dims, std::span<const cdouble> data) {
  Tensor t{DType::Complex128, std::move(dims), {}};
  t.bytes.resize(data.size_bytes());
  std::memcpy(t.bytes.data(), data.data(), data.size_bytes());
  write_tensor(path, t);
}

std::vector<double> tensor_as_f64(const Tensor &t) {
  const std::size_t n = t.num_elements();
  std::vector<double> out(n);
  const std::uint8_t *p = t.bytes.data();
  for (std::size_t i = 0; i < n; ++i) {
    switch (t.dtype) {
    case DType::Float32: out[i] = load<float>(p + 4 * i); break;
    case DType::Float64: out[i] = load<double>(p + 8 * i); break;
    case DType::Int32: out[i] = load<std::int32_t>(p + 4 * i); break;
    case DType::Int64: out[i] = static_cast<double>(load<std::int64_t>(p + 8 * i)); break;
    case DType::UInt8: out[i] = p[i]; break;
    default: throw FormatError(std::string("expected a real tensor, got ") + dtype_name(t.dtype));
    }
  }
  return out;
}

std::vector<cdouble> tensor_as_c128(const Tensor &t) {
  const std::size_t n = t.num_elements();
  std::vector<cdouble> out(n);
  const std::uint8_t *p = t.bytes.data();
  for (std::size_t i = 0; i < n; ++i) {
    switch (t.dtype) {
    case DType::Complex64: out[i] = {load<float>(p + 8 * i), load<float>(p + 8 * i + 4)}; break;
    case DType::Complex128: out[i] = {load<double>(p + 16 * i), load<double>(p + 16 * i + 8)}; break;
    default: throw FormatError(std::string("expected a complex tensor, got ") + dtype_name(t.dtype));
    }
  }
  return out;
}

} // namespace mvsense
