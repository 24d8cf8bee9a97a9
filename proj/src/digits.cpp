#include "mvsense/digits.hpp"
#include "mvsense/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace mvsense {

namespace {

using Stroke = std::vector<Vec2>;

// Elliptical arc in glyph coordinates (x right, y down), angles in degrees.
Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 16) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double t = (a0 + (a1 - a0) * i / n) * kPi / 180.0;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

Stroke append(Stroke a, const Stroke &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Skeletons on the unit box [0,1]^2.
std::vector<Stroke> skeleton(int label) {
  switch (label) {
  case 0:
    return {arc(0.5, 0.5, 0.32, 0.45, 0, 360, 28)};
  case 1:
    return {{{0.35, 0.2}, {0.52, 0.05}, {0.52, 0.95}}};
  case 2:
    return {append(arc(0.5, 0.3, 0.3, 0.25, 180, 390), Stroke{{0.15, 0.95}, {0.85, 0.95}})};
  case 3:
    return {append(arc(0.5, 0.28, 0.28, 0.23, 200, 450), arc(0.5, 0.73, 0.3, 0.22, 270, 520))};
  case 4:
    return {{{0.65, 0.95}, {0.65, 0.05}, {0.15, 0.65}, {0.85, 0.65}}};
  case 5:
    return {append(Stroke{{0.8, 0.05}, {0.25, 0.05}, {0.22, 0.45}}, arc(0.5, 0.67, 0.3, 0.28, 225, 510))};
  case 6:
    return {arc(0.5, 0.7, 0.3, 0.25, 0, 360, 24), {{0.72, 0.06}, {0.45, 0.2}, {0.28, 0.4}, {0.2, 0.7}}};
  case 7:
    return {{{0.15, 0.05}, {0.85, 0.05}, {0.4, 0.95}}};
  case 8:
    return {arc(0.5, 0.27, 0.25, 0.22, 0, 360, 24), arc(0.5, 0.72, 0.3, 0.24, 0, 360, 24)};
  case 9:
    return {arc(0.5, 0.3, 0.3, 0.25, 0, 360, 24), {{0.8, 0.3}, {0.7, 0.95}}};
  default:
    throw InvalidArgument("procedural_digit: label must be 0..9");
  }
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0.0 ? (ap.x * ab.x + ap.y * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

std::uint32_t read_be32(std::istream &in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char *>(b.data()), 4);
  if (!in)
    throw FormatError("IDX: truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

} // namespace

GrayImage procedural_digit(int label, Rng &rng) {
  const auto strokes = skeleton(label);
  const double angle = uniform(rng, -12.0, 12.0) * kPi / 180.0;
  const double scale = uniform(rng, 0.85, 1.05);
  const double shear = uniform(rng, -0.15, 0.15);
  const double tx = uniform(rng, -1.5, 1.5);
  const double ty = uniform(rng, -1.5, 1.5);
  const double half_width = uniform(rng, 1.1, 1.9);

  // Unit box -> 20x20 box centered in 28x28, then jitter about the center.
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto place = [&](Vec2 q) {
    const double x = (q.x - 0.5) * 20.0 * scale;
    const double y = (q.y - 0.5) * 20.0 * scale;
    const double xs = x + shear * y;
    return Vec2{14.0 + tx + ca * xs - sa * y, 14.0 + ty + sa * xs + ca * y};
  };
  std::vector<std::pair<Vec2, Vec2>> segs;
  for (const auto &s : strokes)
    for (std::size_t i = 1; i < s.size(); ++i)
      segs.emplace_back(place(s[i - 1]), place(s[i]));

  GrayImage img{28, 28, std::vector<double>(28 * 28, 0.0)};
  for (int r = 0; r < 28; ++r)
    for (int c = 0; c < 28; ++c) {
      const Vec2 p{c + 0.5, r + 0.5};
      double d = 1e9;
      for (const auto &[a, b] : segs)
        d = std::min(d, segment_distance(p, a, b));
      img.at(r, c) = std::clamp(1.0 - (d - half_width), 0.0, 1.0);
    }
  return img;
}

std::vector<GrayImage> load_idx_images(const std::filesystem::path &path, std::size_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("IDX: cannot open " + path.string());
  if (read_be32(in) != 0x00000803u)
    throw FormatError("IDX: " + path.string() + " is not an IDX3 ubyte image file");
  std::size_t count = read_be32(in);
  const int rows = static_cast<int>(read_be32(in));
  const int cols = static_cast<int>(read_be32(in));
  if (limit > 0)
    count = std::min(count, limit);
  std::vector<GrayImage> out;
  out.reserve(count);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols));
  for (std::size_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in)
      throw FormatError("IDX: truncated image data in " + path.string());
    GrayImage img{rows, cols, std::vector<double>(buf.size())};
    for (std::size_t k = 0; k < buf.size(); ++k)
      img.pixels[k] = buf[k] / 255.0;
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<int> load_idx_labels(const std::filesystem::path &path, std::size_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("IDX: cannot open " + path.string());
  if (read_be32(in) != 0x00000801u)
    throw FormatError("IDX: " + path.string() + " is not an IDX1 ubyte label file");
  std::size_t count = read_be32(in);
  if (limit > 0)
    count = std::min(count, limit);
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(count));
  if (!in)
    throw FormatError("IDX: truncated label data in " + path.string());
  return {buf.begin(), buf.end()};
}

} // namespace mvsense
