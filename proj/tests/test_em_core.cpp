#include "doctest.h"

#include "mvsense/forward.hpp"
#include "mvsense/green.hpp"
#include "mvsense/scene.hpp"

#include <algorithm>
#include <cmath>

using namespace mvsense;

namespace {

ViewLayout small_layout(int nb, int nu, int nr = 4) {
  ViewLayout l;
  for (int b = 0; b < nb; ++b) {
    const double ang = 0.7 + 2.0 * kPi * b / nb;
    l.bs_positions.push_back({90.0 * std::cos(ang), 90.0 * std::sin(ang)});
  }
  for (int u = 0; u < nu; ++u) {
    const double ang = 0.3 + 2.0 * kPi * u / nu;
    l.ue_positions.push_back({6.0 * std::cos(ang), 6.0 * std::sin(ang)});
  }
  l.bs_array_antennas = nr;
  l.element_spacing = 0.05;
  return l;
}

TargetScene square_target(const RoiGrid &grid, double eps, double sigma) {
  auto s = TargetScene::empty(grid);
  const int n = grid.resolution();
  for (int r = n / 4; r < 3 * n / 4; ++r)
    for (int c = n / 3; c < 2 * n / 3; ++c) {
      s.eps_r[static_cast<std::size_t>(r * n + c)] = eps;
      s.sigma[static_cast<std::size_t>(r * n + c)] = sigma;
    }
  return s;
}

// k^2 * integral over a disk of radius a of (j/4) H0(k |r - r'|), by polar
// midpoint quadrature around the disk center located `dist` away from r.
// Uses the libstdc++ Bessel functions, independent of the kernel code.
cdouble disk_integral(double k, double a, double dist, int nrad, int nang) {
  cdouble acc{};
  const double dr = a / nrad;
  const double dt = 2.0 * kPi / nang;
  for (int i = 0; i < nrad; ++i) {
    const double rho = (i + 0.5) * dr;
    for (int t = 0; t < nang; ++t) {
      const double th = (t + 0.5) * dt;
      const double x = dist + rho * std::cos(th);
      const double y = rho * std::sin(th);
      const double d = std::hypot(x, y);
      const cdouble h0{std::cyl_bessel_j(0.0, k * d), std::cyl_neumann(0.0, k * d)};
      acc += h0 * rho * dr * dt;
    }
  }
  return k * k * cdouble{0.0, 0.25} * acc;
}

} // namespace

TEST_CASE("wavenumber") {
  PhysicsConfig cfg;
  CHECK(wavenumber(3e9, cfg) == doctest::Approx(62.87535).epsilon(1e-6));
  CHECK(wavenumber(6e9, cfg) == 2.0 * wavenumber(3e9, cfg));
  CHECK_THROWS_AS(wavenumber(0.0, cfg), InvalidArgument);
  CHECK_THROWS_AS(wavenumber(-1.0, cfg), InvalidArgument);
}

TEST_CASE("impedance is derived from eps0 and mu0") {
  PhysicsConfig cfg;
  CHECK(cfg.impedance() == doctest::Approx(376.730313).epsilon(1e-8));
  cfg.vacuum_permeability *= 4.0;
  CHECK(cfg.impedance() == doctest::Approx(2.0 * 376.730313).epsilon(1e-8));
}

TEST_CASE("subcarriers are centered on the carrier") {
  PhysicsConfig cfg;
  const auto f = cfg.frequencies();
  REQUIRE(f.size() == 8);
  CHECK(0.5 * (f.front() + f.back()) == doctest::Approx(3e9));
  CHECK(f[1] - f[0] == doctest::Approx(100e3));
}

TEST_CASE("contrast") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 4);
  auto scene = TargetScene::empty(grid);
  CHECK(contrast(scene, 3e9, cfg).isZero(0.0));

  const cdouble chi = pixel_contrast(1.5, 0.05, 3e9, cfg);
  CHECK(chi.real() == doctest::Approx(0.5));
  CHECK(chi.imag() == doctest::Approx(0.2996).epsilon(1e-3));
  CHECK(pixel_contrast(1.5, 0.05, 6e9, cfg).imag() == doctest::Approx(0.5 * chi.imag()));
}

TEST_CASE("grid geometry") {
  const RoiGrid grid(0.015625, 2);
  CHECK(grid.pixel_side() == 0.0078125);
  CHECK(grid.equivalent_radius() == doctest::Approx(0.0044077).epsilon(1e-4));
  CHECK(grid.num_pixels() == 4);
  // Row 0 is the top row.
  CHECK(grid.pixel_center(0).y > 0.0);
  CHECK(grid.pixel_center(0).x < 0.0);
  const RoiGrid big(0.5, 16);
  for (const auto &p : big.pixel_centers())
    CHECK(big.contains(p));
  CHECK_FALSE(big.contains({0.3, 0.0}));
}

TEST_CASE("green matrix structure") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 8);
  const auto g = green_matrix(grid, 3e9, cfg);
  REQUIRE(g.matrix.rows() == 64);
  CHECK((g.matrix - g.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int m = 1; m < 64; ++m)
    CHECK(g.matrix(m, m) == g.matrix(0, 0));

  const double k = g.wavenumber;
  const double a = grid.equivalent_radius();
  const cdouble diag = kJ * (k * kPi * a / 2.0) * hankel1_1(k * a) - 1.0;
  CHECK(std::abs(g.matrix(0, 0) - diag) < 1e-14);
}

TEST_CASE("green entries match direct disk quadrature") {
  // The closed forms are exact integrals of the 2-D Green's function over
  // the equal-area disk; check them against brute-force quadrature.
  const double k = 62.87535;
  const double a = 0.0078125 / std::sqrt(kPi);
  const GreenKernel kernel(0.0078125, k, 4);

  const cdouble self = disk_integral(k, a, 0.0, 2000, 64);
  CHECK(std::abs(self - kernel.self_term()) < 2e-4 * std::abs(kernel.self_term()));

  const cdouble off = disk_integral(k, a, 2.0 * 0.0078125, 400, 400);
  const cdouble model = kernel({0, 0}, {2, 0});
  CHECK(std::abs(off - model) < 1e-4 * std::abs(model));
}

TEST_CASE("incident channel") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 8);
  // UE on the symmetry axis x = 0: mirrored columns are equidistant.
  const Vec2 ue{0.0, 5.0};
  const CVec h = incident_channel(grid, ue, 3e9, cfg);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(std::abs(h[r * 8 + c] - h[r * 8 + (7 - c)]) < 1e-12 * std::abs(h[r * 8 + c]));

  // |H0(x)| ~ sqrt(2/(pi x)) decays monotonically once x >> 1.
  std::vector<Vec2> pts;
  for (int i = 0; i < 20; ++i)
    pts.push_back({0.0, 1.0 + 0.37 * i});
  const CVec line = incident_field_at(pts, {0.0, 0.0}, 62.87535, 376.73);
  for (int i = 1; i < 20; ++i)
    CHECK(std::abs(line[i]) < std::abs(line[i - 1]));

  PhysicsConfig cfg2 = cfg;
  cfg2.vacuum_permeability *= 4.0;
  const CVec h2 = incident_channel(grid, ue, 3e9, cfg2);
  CHECK((h2 - 2.0 * h).norm() < 1e-12 * h.norm());

  CHECK_THROWS_AS(incident_channel(grid, {0.1, 0.1}, 3e9, cfg), InvalidArgument);
}

TEST_CASE("rx channel") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 8);
  const double k = wavenumber(3e9, cfg);
  const std::vector<Vec2> a{{3.0, 1.0}};
  const std::vector<Vec2> b{{0.1, -0.05}};
  CHECK(receive_kernel_at(a, b, k, 1.0)(0, 0) == receive_kernel_at(b, a, k, 1.0)(0, 0));

  ViewLayout layout = small_layout(1, 1, 1);
  const CMat row = rx_channel(grid, layout, 0, 3e9, cfg);
  REQUIRE(row.rows() == 1);
  REQUIRE(row.cols() == 64);
  CHECK(row.allFinite());
  // With one antenna, the row and the incident channel from the same point
  // share the Hankel kernel; their ratio is the constant weight / (j k eta j/4).
  const CVec inc = incident_channel(grid, layout.antenna_positions(0)[0], 3e9, cfg);
  const double a_eq = grid.equivalent_radius();
  const cdouble weight = kJ * (k * kPi * a_eq / 2.0) * std::cyl_bessel_j(1.0, k * a_eq);
  const cdouble expected_ratio = weight / (-k * cfg.impedance() / 4.0);
  for (int m = 0; m < 64; ++m)
    CHECK(std::abs(row(0, m) / inc[m] - expected_ratio) < 1e-10 * std::abs(expected_ratio));

  ViewLayout inside = layout;
  inside.bs_positions = {{0.1, 0.0}};
  CHECK_THROWS_AS(rx_channel(grid, inside, 0, 3e9, cfg), std::exception);
}

TEST_CASE("scattering operator") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 8);
  const auto g = green_matrix(grid, 3e9, cfg);
  CHECK(scattering_operator(g, CVec::Zero(64)).isZero(0.0));

  const auto scene = square_target(grid, 1.8, 0.05);
  const CVec chi = contrast(scene, 3e9, cfg);
  const CMat x = scattering_operator(g, chi);
  const CMat lhs = x * (CMat::Identity(64, 64) - g.matrix * chi.asDiagonal());
  CHECK((lhs - CMat(chi.asDiagonal())).cwiseAbs().maxCoeff() < 1e-10);

  // Neumann series: X = diag(chi) + O(|chi|^2).
  double prev = 1.0;
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const CVec c = CVec::Constant(64, cdouble{delta, 0.0});
    const CMat xd = scattering_operator(g, c);
    const double rel = (xd - CMat(c.asDiagonal())).norm() / CMat(c.asDiagonal()).norm();
    CHECK(rel < prev);
    prev = rel;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("total field by support solve equals the dense inverse") {
  PhysicsConfig cfg;
  const RoiGrid grid(0.5, 8);
  const auto g = green_matrix(grid, 3e9, cfg);
  const auto scene = square_target(grid, 1.6, 0.03);
  const CVec chi = contrast(scene, 3e9, cfg);
  CMat inc(64, 2);
  inc.col(0) = incident_channel(grid, {5.0, 1.0}, 3e9, cfg);
  inc.col(1) = incident_channel(grid, {-2.0, 6.0}, 3e9, cfg);
  const GreenKernel kernel(grid.pixel_side(), g.wavenumber, 7);
  const CMat e = total_field(kernel, grid, chi, inc);
  const CMat dense = (CMat::Identity(64, 64) - g.matrix * chi.asDiagonal()).partialPivLu().solve(inc);
  CHECK((e - dense).norm() < 1e-10 * dense.norm());
}

TEST_CASE("single view channel: factorization identity") {
  PhysicsConfig cfg;
  cfg.num_subcarriers = 3;
  const RoiGrid grid(0.5, 8);
  const auto scene = square_target(grid, 1.7, 0.06);
  const auto layout = small_layout(2, 2);

  CHECK(single_view_channel(TargetScene::empty(grid), layout, 0, 0, cfg).isZero(0.0));

  const CMat h = single_view_channel(scene, layout, 1, 0, cfg);
  REQUIRE(h.rows() == 4);
  REQUIRE(h.cols() == 3);
  const int d = grid.num_pixels();
  for (int n = 0; n < 3; ++n) {
    const double f = cfg.subcarrier_frequency(n);
    const auto g = green_matrix(grid, f, cfg, n);
    const CMat x = scattering_operator(g, contrast(scene, f, cfg));
    const CVec hur = incident_channel(grid, layout.ue_positions[0], f, cfg);
    const CMat hrb = rx_channel(grid, layout, 1, f, cfg);
    // ((h_ur)^T kron H_rb) vec(X), expanded explicitly.
    CMat kron(hrb.rows(), static_cast<Eigen::Index>(d) * d);
    for (int mp = 0; mp < d; ++mp)
      for (int m = 0; m < d; ++m)
        kron.col(static_cast<Eigen::Index>(mp) * d + m) = hur[mp] * hrb.col(m);
    const CVec vecx = Eigen::Map<const CVec>(x.data(), x.size());
    const CVec expected = kron * vecx;
    CHECK((h.col(n) - expected).norm() < 1e-10 * expected.norm());
  }
}

TEST_CASE("clutter-only scene scatters") {
  PhysicsConfig cfg;
  cfg.num_subcarriers = 2;
  const RoiGrid grid(0.5, 16);
  auto scene = TargetScene::empty(grid);
  scene.clutter.push_back({{0.7, -0.8}, 0.05, 2.0, 0.05});
  CHECK(clutter_cells(scene).size() > 0);
  const auto layout = small_layout(1, 1);
  CHECK(single_view_channel(scene, layout, 0, 0, cfg).norm() > 0.0);

  // Same target with and without clutter.
  auto target = square_target(grid, 1.6, 0.02);
  auto cluttered = target;
  cluttered.clutter = scene.clutter;
  const auto a = multi_view_channels(target, small_layout(2, 2), cfg);
  const auto b = multi_view_channels(cluttered, small_layout(2, 2), cfg);
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    CHECK((a.entries[i].H - b.entries[i].H).norm() > 0.0);
}

TEST_CASE("clutter cells stay outside the RoI") {
  const RoiGrid grid(0.5, 32);
  auto scene = TargetScene::empty(grid);
  scene.clutter.push_back({{0.6, 0.9}, 0.05, 2.0, 0.0});
  scene.clutter.push_back({{0.61, 0.9}, 0.05, 2.0, 0.0}); // overlapping
  const auto cells = clutter_cells(scene);
  for (const auto &c : cells)
    CHECK_FALSE(grid.contains(grid.cell_center(c.cell)));
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      CHECK_FALSE(cells[i].cell == cells[j].cell);
}

TEST_CASE("multi view channels") {
  PhysicsConfig cfg;
  cfg.num_subcarriers = 2;
  const RoiGrid grid(0.5, 8);
  const auto scene = square_target(grid, 1.5, 0.01);

  const auto one = multi_view_channels(scene, small_layout(1, 1), cfg);
  CHECK(one.entries.size() == 1);

  const auto layout = small_layout(3, 2);
  const auto set = multi_view_channels(scene, layout, cfg);
  REQUIRE(set.entries.size() == 6);
  for (int b = 0; b < 3; ++b)
    for (int u = 0; u < 2; ++u) {
      CHECK(set.at(b, u).bs_position == layout.bs_positions[static_cast<std::size_t>(b)]);
      CHECK(set.at(b, u).ue_position == layout.ue_positions[static_cast<std::size_t>(u)]);
      CHECK((set.at(b, u).H - single_view_channel(scene, layout, b, u, cfg)).norm() <
            1e-12 * set.at(b, u).H.norm());
    }

  ViewLayout permuted = layout;
  std::reverse(permuted.bs_positions.begin(), permuted.bs_positions.end());
  const auto pset = multi_view_channels(scene, permuted, cfg);
  for (int b = 0; b < 3; ++b)
    for (int u = 0; u < 2; ++u)
      CHECK((pset.at(b, u).H - set.at(2 - b, u).H).norm() <= 1e-13 * set.at(2 - b, u).H.norm());

  const auto again = multi_view_channels(scene, layout, cfg);
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    CHECK(again.entries[i].H == set.entries[i].H);
}

TEST_CASE("Born limit") {
  PhysicsConfig cfg;
  cfg.num_subcarriers = 2;
  const RoiGrid grid(0.5, 16);
  const auto layout = small_layout(2, 2);
  double prev = 1.0;
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const auto scene = square_target(grid, 1.0 + delta, 0.0);
    const auto full = multi_view_channels(scene, layout, cfg);
    const auto born = multi_view_channels(scene, layout, cfg, {ScatteringModel::Born});
    double num = 0, den = 0;
    for (std::size_t i = 0; i < full.entries.size(); ++i) {
      num += (full.entries[i].H - born.entries[i].H).squaredNorm();
      den += full.entries[i].H.squaredNorm();
    }
    const double rel = std::sqrt(num / den);
    CHECK(rel < prev);
    prev = rel;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("resonant contrast is reported") {
  // Uniform chi = 1/lambda for an eigenvalue lambda of G makes I - G chi singular.
  const GreenKernel kernel(0.01, 60.0, 2);
  const std::vector<LatticeCell> cells{{0, 0}, {1, 0}, {2, 1}};
  const CMat g = kernel.block(cells, cells);
  const Eigen::ComplexEigenSolver<CMat> es(g);
  const CVec chi = CVec::Constant(3, 1.0 / es.eigenvalues()[0]);
  const CMat rhs = CMat::Ones(3, 1);
  try {
    solve_state_equation(kernel, cells, chi, rhs);
    FAIL("expected NumericFailure");
  } catch (const NumericFailure &e) {
    CHECK(e.condition_estimate() > 1e12);
  }
}
