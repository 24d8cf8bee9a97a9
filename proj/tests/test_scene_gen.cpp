#include "doctest.h"

#include "mvsense/digits.hpp"
#include "mvsense/generators.hpp"
#include "mvsense/point_cloud.hpp"
#include "mvsense/tensor_io.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mvsense;
namespace fs = std::filesystem;

namespace {

GrayImage constant_image(int rows, int cols, double v) {
  GrayImage im;
  im.rows = rows;
  im.cols = cols;
  im.pixels.assign(static_cast<std::size_t>(rows * cols), v);
  return im;
}

// Nearest-neighbour resample of the centered image box onto the grid.
int nearest_neighbour_area(const GrayImage &im, const RoiGrid &grid, double fill, double threshold) {
  const double box = fill * grid.side_length();
  int count = 0;
  for (int m = 0; m < grid.num_pixels(); ++m) {
    const Vec2 p = grid.pixel_center(m);
    const double u = (p.x + 0.5 * box) / box;
    const double v = (0.5 * box - p.y) / box;
    if (u < 0 || u >= 1 || v < 0 || v >= 1)
      continue;
    const int c = static_cast<int>(u * im.cols);
    const int r = static_cast<int>(v * im.rows);
    count += im.at(r, c) > threshold ? 1 : 0;
  }
  return count;
}

fs::path temp_dir(const std::string &name) {
  auto p = fs::temp_directory_path() / ("mvsense_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("rasterize all-zero image is degenerate") {
  RoiGrid grid(0.5, 64);
  CHECK_THROWS_AS(rasterize_binary_image(constant_image(28, 28, 0.0), 2.0, 0.01, grid), DegenerateScene);
}

TEST_CASE("rasterize all-one image fills the image box") {
  RoiGrid grid(0.5, 64);
  RasterOptions full;
  full.fill_fraction = 1.0;
  const auto s = rasterize_binary_image(constant_image(28, 28, 1.0), 2.0, 0.01, grid, {}, full);
  CHECK(s.foreground_count() == grid.num_pixels());
  for (int m = 0; m < grid.num_pixels(); ++m) {
    CHECK(s.eps_r[m] == 2.0);
    CHECK(s.sigma[m] == 0.01);
  }
}

TEST_CASE("rasterize rejects materials outside the EM ranges") {
  RoiGrid grid(0.5, 32);
  const auto im = constant_image(28, 28, 1.0);
  CHECK_THROWS_AS(rasterize_binary_image(im, 3.0, 0.0, grid), InvalidArgument);
  CHECK_THROWS_AS(rasterize_binary_image(im, 2.0, 0.2, grid), InvalidArgument);
}

TEST_CASE("rasterized digit area matches a nearest-neighbour resample") {
  RoiGrid grid(0.5, 64);
  for (int label = 0; label < 10; ++label) {
    Rng rng = make_stream(7, static_cast<std::uint64_t>(label), Stream::Scene);
    const auto im = procedural_digit(label, rng);
    const auto s = rasterize_binary_image(im, 2.0, 0.0, grid);
    const int oracle = nearest_neighbour_area(im, grid, 0.8, 0.5);
    REQUIRE(oracle > 0);
    CHECK(std::abs(s.foreground_count() - oracle) <= 0.1 * oracle);
  }
}

TEST_CASE("procedural digits are 28x28 within [0, 1] and deterministic") {
  for (int label = 0; label < 10; ++label) {
    Rng a = make_stream(1, 0, Stream::Scene);
    Rng b = make_stream(1, 0, Stream::Scene);
    const auto x = procedural_digit(label, a);
    const auto y = procedural_digit(label, b);
    CHECK(x.rows == 28);
    CHECK(x.cols == 28);
    CHECK(x.pixels == y.pixels);
    CHECK(*std::min_element(x.pixels.begin(), x.pixels.end()) >= 0.0);
    CHECK(*std::max_element(x.pixels.begin(), x.pixels.end()) <= 1.0);
    // Border rows stay empty like the MNIST padding.
    for (int c = 0; c < 28; ++c) {
      CHECK(x.at(0, c) == 0.0);
      CHECK(x.at(27, c) == 0.0);
    }
  }
  Rng rng = make_stream(1, 0, Stream::Scene);
  CHECK_THROWS_AS(procedural_digit(10, rng), InvalidArgument);
}

TEST_CASE("IDX loaders") {
  const auto dir = temp_dir("idx");
  {
    std::ofstream f(dir / "img", std::ios::binary);
    const unsigned char hdr[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3};
    f.write(reinterpret_cast<const char *>(hdr), sizeof hdr);
    const unsigned char px[] = {0, 255, 0, 51, 0, 0, 255, 255, 255, 255, 255, 255};
    f.write(reinterpret_cast<const char *>(px), sizeof px);
    std::ofstream l(dir / "lbl", std::ios::binary);
    const unsigned char lh[] = {0, 0, 8, 1, 0, 0, 0, 2, 7, 3};
    l.write(reinterpret_cast<const char *>(lh), sizeof lh);
  }
  const auto imgs = load_idx_images(dir / "img");
  REQUIRE(imgs.size() == 2);
  CHECK(imgs[0].rows == 2);
  CHECK(imgs[0].cols == 3);
  CHECK(imgs[0].at(0, 1) == 1.0);
  CHECK(imgs[0].at(1, 0) == doctest::Approx(0.2));
  CHECK(load_idx_images(dir / "img", 1).size() == 1);
  CHECK(load_idx_labels(dir / "lbl") == std::vector<int>{7, 3});
  CHECK_THROWS_AS(load_idx_images(dir / "lbl"), FormatError);
  CHECK_THROWS_AS(load_idx_labels(dir / "img"), FormatError);
  CHECK_THROWS_AS(load_idx_images(dir / "missing"), FormatError);
  fs::resize_file(dir / "img", 20);
  CHECK_THROWS_AS(load_idx_images(dir / "img"), FormatError);
}

TEST_CASE("multi-object placement never overlaps") {
  RoiGrid grid(0.5, 64);
  MultiObjRanges ranges;
  const double half = 0.25;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng = make_stream(11, i, Stream::Scene);
    const auto shapes = place_objects(rng, grid, ranges);
    REQUIRE(shapes.size() >= 2);
    REQUIRE(shapes.size() <= 4);
    for (std::size_t a = 0; a < shapes.size(); ++a) {
      const auto &s = shapes[a];
      CHECK(s.width >= ranges.min_size);
      CHECK(s.width <= ranges.max_size);
      CHECK(ranges.em.contains(s.eps_r, s.sigma));
      CHECK(std::abs(s.center.x) + 0.5 * s.width <= half + 1e-12);
      CHECK(std::abs(s.center.y) + 0.5 * s.height <= half + 1e-12);
      for (std::size_t b = a + 1; b < shapes.size(); ++b)
        CHECK(norm(s.center - shapes[b].center) >= s.bounding_radius() + shapes[b].bounding_radius());
    }
  }
}

TEST_CASE("impossible placement fails after the retry budget") {
  RoiGrid grid(0.5, 32);
  MultiObjRanges ranges;
  ranges.min_objects = ranges.max_objects = 4;
  ranges.min_size = ranges.max_size = 0.4;
  ranges.max_retries = 50;
  Rng rng = make_stream(3, 0, Stream::Scene);
  CHECK_THROWS_AS(place_objects(rng, grid, ranges), DegenerateScene);
}

TEST_CASE("single centered circle rasterizes to a disk") {
  RoiGrid grid(0.5, 64);
  Shape c;
  c.kind = ShapeKind::Circle;
  c.center = {0.0, 0.0};
  c.width = 0.2;
  c.eps_r = 1.8;
  const auto s = rasterize_shapes({c}, grid);
  for (int m = 0; m < grid.num_pixels(); ++m)
    CHECK(s.is_background(m) == (norm(grid.pixel_center(m)) > 0.1));
  const double area = s.foreground_count() * grid.pixel_side() * grid.pixel_side();
  CHECK(area == doctest::Approx(kPi * 0.01).epsilon(0.03));
}

TEST_CASE("partial-volume disk conserves contrast mass") {
  RoiGrid grid(0.5, 64);
  const auto s = rasterize_disk_coverage(grid, {0.03, -0.02}, 0.1, 2.0, 0.05, 32);
  double mass = 0.0;
  for (int m = 0; m < grid.num_pixels(); ++m) {
    CHECK(s.eps_r[m] >= 1.0);
    CHECK(s.eps_r[m] <= 2.0);
    mass += (s.eps_r[m] - 1.0) * grid.pixel_side() * grid.pixel_side();
  }
  CHECK(mass == doctest::Approx(kPi * 0.01).epsilon(2e-3));
}

TEST_CASE("clutter lies in the corner band") {
  ClutterRanges ranges;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng = make_stream(5, i, Stream::Clutter);
    const auto disks = gen_clutter(rng, 3, ranges);
    REQUIRE(disks.size() == 3);
    for (const auto &d : disks) {
      CHECK(std::abs(d.center.x) > 0.5);
      CHECK(std::abs(d.center.x) < 1.0);
      CHECK(std::abs(d.center.y) > 0.5);
      CHECK(std::abs(d.center.y) < 1.0);
      CHECK(d.diameter == 0.05);
      CHECK(ranges.em.contains(d.eps_r, d.sigma));
    }
  }
  Rng rng = make_stream(5, 0, Stream::Clutter);
  CHECK(gen_clutter(rng, 0).empty());
  CHECK_THROWS_AS(gen_clutter(rng, -1), InvalidArgument);
}

TEST_CASE("view layout sampling") {
  Rng rng = make_stream(9, 0, Stream::Layout);
  const auto l = sample_view_layout(rng, 16, 32);
  CHECK(l.bs_positions.size() == 16);
  CHECK(l.ue_positions.size() == 32);
  for (auto p : l.bs_positions) {
    CHECK(norm(p) >= 80.0);
    CHECK(norm(p) <= 100.0);
  }
  for (auto p : l.ue_positions) {
    CHECK(norm(p) >= 4.0);
    CHECK(norm(p) <= 10.0);
  }
  Rng again = make_stream(9, 0, Stream::Layout);
  const auto l2 = sample_view_layout(again, 16, 32);
  CHECK(l2.bs_positions == l.bs_positions);
  CHECK(l2.ue_positions == l.ue_positions);
  CHECK_THROWS_AS(sample_view_layout(rng, 17, 4), InvalidArgument);
  CHECK_THROWS_AS(sample_view_layout(rng, 4, 33), InvalidArgument);
  CHECK_THROWS_AS(sample_view_layout(rng, 0, 4), InvalidArgument);
}

TEST_CASE("point clouds sample the foreground") {
  RoiGrid grid(0.5, 32);
  auto scene = TargetScene::empty(grid);
  for (int m : {100, 101, 102, 400})
    scene.eps_r[m] = 2.2, scene.sigma[m] = 0.04;
  Rng rng = make_stream(2, 0, Stream::Points);
  const auto cloud = sample_scene_points(scene, 1000, rng);
  REQUIRE(cloud.size() == 1000);
  const double hs = 0.5 * grid.pixel_side();
  for (const auto &p : cloud.points) {
    CHECK(p[2] == 2.2);
    CHECK(p[3] == 0.04);
    bool inside = false;
    for (int m : {100, 101, 102, 400}) {
      const Vec2 c = grid.pixel_center(m);
      inside = inside || (std::abs(p[0] - c.x) <= hs && std::abs(p[1] - c.y) <= hs);
    }
    CHECK(inside);
  }
  CHECK_THROWS_AS(sample_scene_points(TargetScene::empty(grid), 10, rng), DegenerateScene);
}

TEST_CASE("normalization statistics and round trip") {
  RoiGrid grid(0.5, 32);
  std::vector<PointCloud> raw;
  for (std::uint64_t i = 0; i < 4; ++i) {
    Rng rng = make_stream(4, i, Stream::Scene);
    auto scene = gen_multi_obj(rng, grid);
    Rng prng = make_stream(4, i, Stream::Points);
    raw.push_back(sample_scene_points(scene, 500, prng));
  }
  const auto res = compute_norm_stats(raw);
  for (int d = 0; d < 4; ++d)
    CHECK_FALSE(res.inflated[d]);

  // Two-pass oracle over the pooled points.
  for (int d = 0; d < 4; ++d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &c : raw)
      for (const auto &p : c.points)
        sum += p[d], ++n;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto &c : raw)
      for (const auto &p : c.points)
        ss += (p[d] - mean) * (p[d] - mean);
    CHECK(res.stats.mean[d] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(res.stats.std[d] == doctest::Approx(std::sqrt(ss / n)).epsilon(1e-12));
  }

  std::vector<PointCloud> normalized;
  for (const auto &c : raw)
    normalized.push_back(res.stats.normalize(c));
  const auto check = compute_norm_stats(normalized);
  for (int d = 0; d < 4; ++d) {
    CHECK(std::abs(check.stats.mean[d]) < 1e-10);
    CHECK(check.stats.std[d] == doctest::Approx(1.0).epsilon(1e-10));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto back = res.stats.denormalize(normalized[i]);
    for (std::size_t k = 0; k < raw[i].size(); ++k)
      for (int d = 0; d < 4; ++d)
        CHECK(std::abs(back.points[k][d] - raw[i].points[k][d]) <= 1e-12 * (1.0 + std::abs(raw[i].points[k][d])));
  }
}

TEST_CASE("homogeneous material inflates the degenerate std") {
  RoiGrid grid(0.5, 32);
  auto scene = TargetScene::empty(grid);
  for (int m = 0; m < 64; ++m)
    scene.eps_r[m] = 2.0;
  std::vector<PointCloud> raw;
  for (std::uint64_t i = 0; i < 2; ++i) {
    Rng rng = make_stream(8, i, Stream::Points);
    raw.push_back(sample_scene_points(scene, 100, rng));
  }
  const auto res = compute_norm_stats(raw, 1e-6);
  CHECK_FALSE(res.inflated[0]);
  CHECK(res.inflated[2]);
  CHECK(res.inflated[3]);
  CHECK(res.stats.std[2] == 1e-6);
  CHECK(res.stats.mean[2] == 2.0);
  CHECK_THROWS_AS(compute_norm_stats(std::span<const PointCloud>(raw.data(), 1)), InvalidArgument);
}

TEST_CASE("tensor files round trip") {
  const auto dir = temp_dir("tensor");
  std::vector<double> r = {1.0, -2.5, 3.25, 1e-300, 4.0, 5.0};
  write_f64(dir / "r.bin", {2, 3}, r);
  const auto t = read_tensor(dir / "r.bin");
  CHECK(t.dtype == DType::Float64);
  CHECK(t.dims == std::vector<std::size_t>{2, 3});
  CHECK(tensor_as_f64(t) == r);
  CHECK(fs::file_size(dir / "r.bin") == kTensorHeaderBytes + 6 * 8);

  std::vector<cdouble> c = {{1, 2}, {3, -4}};
  write_c128(dir / "c.bin", {1, 1, 2}, c);
  const auto tc = read_tensor(dir / "c.bin");
  CHECK(tensor_as_c128(tc) == c);
  CHECK_THROWS_AS(tensor_as_f64(tc), FormatError);
  CHECK_THROWS_AS(tensor_as_c128(t), FormatError);

  Tensor f32;
  f32.dtype = DType::Float32;
  f32.dims = {2};
  const float fv[2] = {0.5f, -1.0f};
  f32.bytes.resize(8);
  std::memcpy(f32.bytes.data(), fv, 8);
  write_tensor(dir / "f.bin", f32);
  CHECK(tensor_as_f64(read_tensor(dir / "f.bin")) == std::vector<double>{0.5, -1.0});

  CHECK_THROWS_AS(write_f64(dir / "bad.bin", {4}, r), InvalidArgument);
  CHECK_THROWS_AS(write_f64(dir / "bad.bin", {70000}, std::vector<double>(70000)), InvalidArgument);
  CHECK_THROWS_AS(read_tensor(dir / "missing.bin"), FormatError);
  fs::resize_file(dir / "r.bin", kTensorHeaderBytes + 8);
  CHECK_THROWS_AS(read_tensor(dir / "r.bin"), FormatError);
  {
    std::ofstream f(dir / "junk.bin", std::ios::binary);
    f << "not a tensor file";
  }
  CHECK_THROWS_AS(read_tensor(dir / "junk.bin"), FormatError);
  write_f64(dir / "r.bin", {2, 3}, r);
  {
    std::ofstream f(dir / "r.bin", std::ios::binary | std::ios::app);
    f << 'x';
  }
  CHECK_THROWS_AS(read_tensor(dir / "r.bin"), FormatError);
}
