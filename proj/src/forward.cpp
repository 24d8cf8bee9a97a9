#include "mvsense/forward.hpp"

#include <limits>
#include <string>

namespace mvsense {

namespace {

Eigen::PartialPivLU<CMat> factor_checked(const CMat &m, const char *context) {
  Eigen::PartialPivLU<CMat> lu(m);
  const double rc = lu.rcond();
  if (!(rc > kSingularRcond))
    throw NumericFailure(std::string(context) + ": singular MoM system (rcond " + std::to_string(rc) + ")",
                         rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity());
  return lu;
}

} // namespace

CMat scattering_operator(const GreenOperator &green, const CVec &chi) {
  const Eigen::Index d = green.matrix.rows();
  if (chi.size() != d || green.matrix.cols() != d)
    throw InvalidArgument("scattering_operator: shape mismatch");
  if (chi.isZero(0.0))
    return CMat::Zero(d, d);
  const CMat m = CMat::Identity(d, d) - green.matrix * chi.asDiagonal();
  auto lu = factor_checked(m, "scattering_operator");
  return chi.asDiagonal() * lu.inverse();
}

CMat solve_state_equation(const GreenKernel &kernel, const std::vector<LatticeCell> &support,
                          const CVec &chi_support, const CMat &rhs) {
  const auto n = static_cast<Eigen::Index>(support.size());
  if (chi_support.size() != n || rhs.rows() != n)
    throw InvalidArgument("solve_state_equation: shape mismatch");
  if (n == 0)
    return rhs;
  CMat m = -(kernel.block(support, support) * chi_support.asDiagonal());
  m.diagonal().array() += 1.0;
  auto lu = factor_checked(m, "solve_state_equation");
  return lu.solve(rhs);
}

CMat total_field(const GreenKernel &kernel, const RoiGrid &grid, const CVec &chi,
                 const CMat &incident) {
  const int d = grid.num_pixels();
  if (chi.size() != d || incident.rows() != d)
    throw InvalidArgument("total_field: shape mismatch");
  std::vector<int> idx;
  for (int m = 0; m < d; ++m)
    if (chi[m] != cdouble{})
      idx.push_back(m);
  if (idx.empty())
    return incident;

  const auto ns = static_cast<Eigen::Index>(idx.size());
  std::vector<LatticeCell> support, all;
  support.reserve(idx.size());
  all.reserve(static_cast<std::size_t>(d));
  CVec chi_s(ns);
  CMat rhs(ns, incident.cols());
  for (Eigen::Index i = 0; i < ns; ++i) {
    const int m = idx[static_cast<std::size_t>(i)];
    support.push_back(grid.lattice_cell(m));
    chi_s[i] = chi[m];
    rhs.row(i) = incident.row(m);
  }
  for (int m = 0; m < d; ++m)
    all.push_back(grid.lattice_cell(m));

  const CMat e_s = solve_state_equation(kernel, support, chi_s, rhs);
  CMat e = incident;
  e.noalias() += kernel.block(all, support) * (chi_s.asDiagonal() * e_s);
  for (Eigen::Index i = 0; i < ns; ++i)
    e.row(idx[static_cast<std::size_t>(i)]) = e_s.row(i);
  return e;
}

ChannelSet multi_view_channels(const TargetScene &scene, const ViewLayout &layout,
                               const PhysicsConfig &cfg, ForwardOptions opts) {
  cfg.validate();
  scene.validate();
  layout.validate();
  const RoiGrid &grid = scene.grid;
  const int nb = layout.num_bs();
  const int nu = layout.num_ue();
  const int nr = layout.bs_array_antennas;
  const int nc = cfg.num_subcarriers;

  std::vector<std::vector<Vec2>> antennas;
  for (int b = 0; b < nb; ++b) {
    antennas.push_back(layout.antenna_positions(b));
    for (const auto &p : antennas.back())
      if (grid.contains(p))
        throw InvalidArgument("multi_view_channels: BS antenna inside the RoI");
  }
  for (const auto &p : layout.ue_positions)
    if (grid.contains(p))
      throw InvalidArgument("multi_view_channels: UE inside the RoI");

  ChannelSet out;
  out.num_bs = nb;
  out.num_ue = nu;
  out.entries.reserve(static_cast<std::size_t>(nb * nu));
  for (int b = 0; b < nb; ++b)
    for (int u = 0; u < nu; ++u)
      out.entries.push_back({b, u, layout.bs_positions[static_cast<std::size_t>(b)],
                             layout.ue_positions[static_cast<std::size_t>(u)], CMat::Zero(nr, nc)});

  const auto cells = scattering_cells(scene);
  if (cells.empty())
    return out;

  std::vector<LatticeCell> lattice;
  std::vector<Vec2> points;
  for (const auto &c : cells) {
    lattice.push_back(c.cell);
    points.push_back(grid.cell_center(c.cell));
  }
  const int max_off = max_lattice_offset(lattice);
  const auto ns = static_cast<Eigen::Index>(cells.size());

  for (int n = 0; n < nc; ++n) {
    const double f = cfg.subcarrier_frequency(n);
    const double k = wavenumber(f, cfg);
    const GreenKernel kernel(grid.pixel_side(), k, max_off);

    CVec chi(ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
      const auto &c = cells[static_cast<std::size_t>(i)];
      chi[i] = pixel_contrast(c.eps_r, c.sigma, f, cfg);
    }
    CMat incident(ns, nu);
    for (int u = 0; u < nu; ++u)
      incident.col(u) = incident_field_at(points, layout.ue_positions[static_cast<std::size_t>(u)], k,
                                          cfg.impedance());

    CMat fields = opts.model == ScatteringModel::Full
                      ? solve_state_equation(kernel, lattice, chi, incident)
                      : incident;
    const CMat currents = chi.asDiagonal() * fields;
    for (int b = 0; b < nb; ++b) {
      const CMat rx = receive_kernel_at(antennas[static_cast<std::size_t>(b)], points, k,
                                        kernel.quadrature_weight());
      const CMat y = rx * currents;
      for (int u = 0; u < nu; ++u)
        out.at(b, u).H.col(n) = y.col(u);
    }
  }
  return out;
}

CMat single_view_channel(const TargetScene &scene, const ViewLayout &layout, int b, int u,
                         const PhysicsConfig &cfg, ForwardOptions opts) {
  if (b < 0 || b >= layout.num_bs() || u < 0 || u >= layout.num_ue())
    throw InvalidArgument("single_view_channel: view index out of range");
  ViewLayout one = layout;
  one.bs_positions = {layout.bs_positions[static_cast<std::size_t>(b)]};
  one.ue_positions = {layout.ue_positions[static_cast<std::size_t>(u)]};
  auto set = multi_view_channels(scene, one, cfg, opts);
  return std::move(set.entries.front().H);
}

} // namespace mvsense
