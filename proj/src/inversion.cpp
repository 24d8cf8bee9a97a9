#include "mvsense/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

namespace mvsense {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Largest eigenvalue of a symmetric PSD matrix, slightly overestimated.
double lipschitz_estimate(const RMat &Q) {
  const Eigen::Index n = Q.rows();
  if (n == 0)
    return 0.0;
  RVec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    const RVec w = Q * v;
    const double nw = w.norm();
    if (nw == 0.0)
      return 0.0;
    lam = v.dot(w);
    v = w / nw;
  }
  return 1.05 * std::max(lam, 0.0) + 1e-300;
}

double group_norm_sum(const RVec &x) {
  const Eigen::Index d = x.size() / 2;
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    s += std::hypot(x[i], x[d + i]);
  return s;
}

// prox of (t * group norm + box indicator) applied to v.
RVec prox(const RVec &v, double t, const RVec &upper) {
  const Eigen::Index d = v.size() / 2;
  RVec z(v.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto g = group_box_prox(v[i], v[d + i], t, upper[i], upper[d + i]);
    z[i] = g[0];
    z[d + i] = g[1];
  }
  return z;
}

// 1-D minimizer over s in [0, u] of 0.5 (s - v)^2 + t sqrt(c^2 + s^2).
double face_minimizer(double v, double c, double t, double u) {
  if (c == 0.0)
    return std::clamp(v - t, 0.0, u);
  auto deriv = [&](double s) { return s - v + t * s / std::hypot(c, s); };
  if (deriv(0.0) >= 0.0)
    return 0.0;
  if (deriv(u) <= 0.0)
    return u;
  double lo = 0.0, hi = u;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * u; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

enum class DataTerm { Squared, Norm };

// Nonmonotone proximal gradient with Barzilai-Borwein steps. The data term is
// 0.5 ||h - A x||^2 or ||h - A x||; both are evaluated exactly from Qx, and the
// norm's gradient (Qx - b) / ||r|| has local Lipschitz bound ||Q|| / ||r||.
SolverResult prox_gradient(const NormalSystem &sys, double lambda, const RVec &upper,
                           const SolverOptions &opts, const RVec *x0, DataTerm term = DataTerm::Squared) {
  const Eigen::Index n = sys.size();
  if (sys.Q.rows() != n || sys.Q.cols() != n || upper.size() != n || n % 2 != 0)
    throw InvalidArgument("box solver: system and bound sizes disagree");
  if (!(lambda >= 0.0))
    throw InvalidArgument("box solver: lambda must be >= 0");
  if ((upper.array() <= 0.0).any())
    throw InvalidArgument("box solver: upper bounds must be > 0");
  if (opts.max_iterations < 1 || !(opts.tolerance > 0.0))
    throw InvalidArgument("box solver: invalid solver options");

  SolverResult res;
  RVec x = x0 ? *x0 : RVec::Zero(n);
  if (x.size() != n)
    throw InvalidArgument("box solver: warm start has the wrong size");
  x = x.cwiseMax(0.0).cwiseMin(upper);

  const double LQ = lipschitz_estimate(sys.Q);
  auto total = [&](const RVec &z, double f) { return f + lambda * group_norm_sum(z); };
  auto data = [&](const RVec &z, const RVec &Qz) {
    const double half_sq = 0.5 * z.dot(Qz) - sys.b.dot(z) + 0.5 * sys.hh;
    return term == DataTerm::Squared ? half_sq : std::sqrt(std::max(0.0, 2.0 * half_sq));
  };
  auto gradient = [&](const RVec &Qz, double f) -> RVec {
    return term == DataTerm::Squared ? RVec(Qz - sys.b) : RVec((Qz - sys.b) / f);
  };
  auto lipschitz = [&](double f) { return term == DataTerm::Squared ? LQ : LQ / f; };

  RVec Qx = sys.Q * x;
  double f = data(x, Qx);
  double F = total(x, f);
  if (LQ == 0.0 || (term == DataTerm::Norm && f == 0.0)) {
    // Constant data term, or an exact fit where the norm is not smooth: the
    // prox of the regularizer alone is returned.
    res.x = term == DataTerm::Norm && f == 0.0 ? x : prox(x, lambda, upper);
    res.objective = total(res.x, data(res.x, sys.Q * res.x));
    res.converged = LQ == 0.0;
    return res;
  }
  RVec g = gradient(Qx, f);

  constexpr int kMemory = 10;
  constexpr double kSigma = 1e-4;
  constexpr int kDivergenceRun = 10;
  std::deque<double> recent{F};
  double L = lipschitz(f);
  double alpha = L; // inverse step
  int rises = 0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const RVec probe = prox(x - g / L, lambda / L, upper);
    if ((probe - x).lpNorm<Eigen::Infinity>() <= opts.tolerance) {
      res.converged = true;
      break;
    }

    const double ref = *std::max_element(recent.begin(), recent.end());
    RVec xn, d, Qd, Qxn;
    double fn = 0.0, Fn = 0.0;
    for (int bt = 0;; ++bt) {
      xn = prox(x - g / alpha, lambda / alpha, upper);
      d = xn - x;
      Qd = sys.Q * d;
      if (term == DataTerm::Squared) {
        fn = f + g.dot(d) + 0.5 * d.dot(Qd);
      } else {
        Qxn = Qx + Qd;
        fn = data(xn, Qxn);
      }
      Fn = total(xn, fn);
      if (!std::isfinite(Fn))
        throw NumericFailure("box solver: non-finite objective", std::numeric_limits<double>::infinity());
      if (Fn <= ref - 0.5 * kSigma * alpha * d.squaredNorm() || bt >= 60)
        break;
      alpha *= 2.0;
    }

    rises = Fn > F ? rises + 1 : 0;
    if (rises >= kDivergenceRun)
      throw NumericFailure("box solver: objective increased over 10 consecutive steps",
                           std::numeric_limits<double>::infinity());

    const double dd = d.squaredNorm();
    x = xn;
    F = Fn;
    recent.push_back(F);
    if (static_cast<int>(recent.size()) > kMemory)
      recent.pop_front();
    res.iterations = it + 1;
    if (term == DataTerm::Squared) {
      const double dQd = d.dot(Qd);
      g += Qd;
      f = fn;
      alpha = (dd > 0.0 && dQd > 0.0) ? std::clamp(dQd / dd, 1e-12 * L, L) : L;
      continue;
    }
    Qx = std::move(Qxn);
    f = fn;
    if (f == 0.0)
      break;
    RVec gn = gradient(Qx, f);
    const double dy = d.dot(gn - g);
    g = std::move(gn);
    L = lipschitz(f);
    alpha = (dd > 0.0 && dy > 0.0) ? std::clamp(dy / dd, 1e-12 * L, L) : L;
  }
  res.x = x;
  res.objective = F;
  return res;
}

double relative_residual(const std::vector<CMat> &C, const std::vector<CVec> &y, const RVec &x,
                         const InversionOperators &ops) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < C.size(); ++n) {
    const CVec chi = unknowns_to_contrast(x, ops.scale(static_cast<int>(n)));
    num += (y[n] - C[n] * chi).squaredNorm();
    den += y[n].squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

} // namespace

InversionOperators build_operators(const RoiGrid &grid, const ViewLayout &layout, const PhysicsConfig &cfg) {
  cfg.validate();
  layout.validate();
  InversionOperators ops;
  ops.grid = grid;
  ops.physics = cfg;
  ops.num_bs = layout.num_bs();
  ops.num_ue = layout.num_ue();
  ops.num_antennas = layout.bs_array_antennas;
  ops.frequencies = cfg.frequencies();

  const auto points = grid.pixel_centers();
  std::vector<Vec2> antennas;
  for (int b = 0; b < ops.num_bs; ++b)
    for (const auto &p : layout.antenna_positions(b)) {
      if (grid.contains(p))
        throw InvalidArgument("build_operators: BS antenna inside the RoI");
      antennas.push_back(p);
    }
  for (const auto &p : layout.ue_positions)
    if (grid.contains(p))
      throw InvalidArgument("build_operators: UE inside the RoI");

  for (double f : ops.frequencies) {
    const double k = wavenumber(f, cfg);
    ops.kernels.emplace_back(grid.pixel_side(), k, grid.resolution() - 1);
    CMat inc(grid.num_pixels(), ops.num_ue);
    for (int u = 0; u < ops.num_ue; ++u)
      inc.col(u) = incident_field_at(points, layout.ue_positions[static_cast<std::size_t>(u)], k, cfg.impedance());
    ops.incident.push_back(std::move(inc));
    ops.receive.push_back(receive_kernel_at(antennas, points, k, ops.kernels.back().quadrature_weight()));
  }
  return ops;
}

CVec stack_channels(const ChannelSet &channels, int n) {
  const int nb = channels.num_bs, nu = channels.num_ue, nr = channels.num_antennas();
  if (n < 0 || n >= channels.num_subcarriers())
    throw InvalidArgument("stack_channels: subcarrier index out of range");
  CVec y(static_cast<Eigen::Index>(nb) * nr * nu);
  for (int u = 0; u < nu; ++u)
    for (int b = 0; b < nb; ++b) {
      const auto &H = channels.at(b, u).H;
      for (int r = 0; r < nr; ++r)
        y[(u * nb + b) * nr + r] = H(r, n);
    }
  return y;
}

CMat assemble_C(const InversionOperators &ops, int n, const CVec *chi) {
  if (n < 0 || n >= ops.num_subcarriers())
    throw InvalidArgument("assemble_C: subcarrier index out of range");
  const auto ni = static_cast<std::size_t>(n);
  const CMat &inc = ops.incident[ni];
  const CMat &rx = ops.receive[ni];
  CMat field;
  if (chi) {
    if (chi->size() != ops.num_pixels())
      throw InvalidArgument("assemble_C: contrast length differs from the pixel count");
    field = total_field(ops.kernels[ni], ops.grid, *chi, inc);
  }
  const CMat &e = chi ? field : inc;
  const Eigen::Index rows = rx.rows();
  CMat C(rows * ops.num_ue, ops.num_pixels());
  for (int u = 0; u < ops.num_ue; ++u)
    C.middleRows(u * rows, rows).noalias() = rx * e.col(u).asDiagonal();
  return C;
}

RVec scene_to_unknowns(const TargetScene &scene, const PhysicsConfig &cfg) {
  const int d = scene.grid.num_pixels();
  const double w = 2.0 * kPi * cfg.center_frequency * cfg.vacuum_permittivity;
  RVec x(2 * d);
  for (int m = 0; m < d; ++m) {
    x[m] = scene.eps_r[static_cast<std::size_t>(m)] - 1.0;
    x[d + m] = scene.sigma[static_cast<std::size_t>(m)] / w;
  }
  return x;
}

CVec unknowns_to_contrast(const RVec &x, double scale) {
  const Eigen::Index d = x.size() / 2;
  CVec chi(d);
  for (Eigen::Index i = 0; i < d; ++i)
    chi[i] = {x[i], scale * x[d + i]};
  return chi;
}

RealStackedSystem real_stack(const std::vector<CMat> &C, const std::vector<CVec> &y,
                             const std::vector<double> &scales) {
  if (C.empty() || C.size() != y.size() || C.size() != scales.size())
    throw InvalidArgument("real_stack: need one matrix, vector and scale per subcarrier");
  const Eigen::Index m = C.front().rows(), d = C.front().cols();
  for (std::size_t n = 0; n < C.size(); ++n)
    if (C[n].rows() != m || C[n].cols() != d || y[n].size() != m)
      throw InvalidArgument("real_stack: shape mismatch at subcarrier " + std::to_string(n));
  RealStackedSystem s;
  s.scales = scales;
  const auto nc = static_cast<Eigen::Index>(C.size());
  s.A.resize(2 * m * nc, 2 * d);
  s.h.resize(2 * m * nc);
  for (Eigen::Index n = 0; n < nc; ++n) {
    const auto &c = C[static_cast<std::size_t>(n)];
    const double sc = scales[static_cast<std::size_t>(n)];
    const Eigen::Index r0 = 2 * m * n;
    s.A.block(r0, 0, m, d) = c.real();
    s.A.block(r0, d, m, d) = -sc * c.imag();
    s.A.block(r0 + m, 0, m, d) = c.imag();
    s.A.block(r0 + m, d, m, d) = sc * c.real();
    s.h.segment(r0, m) = y[static_cast<std::size_t>(n)].real();
    s.h.segment(r0 + m, m) = y[static_cast<std::size_t>(n)].imag();
  }
  return s;
}

double NormalSystem::objective(const RVec &x) const { return 0.5 * x.dot(Q * x) - b.dot(x) + 0.5 * hh; }

NormalSystem normal_equations(const RealStackedSystem &sys) {
  NormalSystem ne;
  ne.Q = sys.A.transpose() * sys.A;
  ne.b = sys.A.transpose() * sys.h;
  ne.hh = sys.h.squaredNorm();
  return ne;
}

NormalSystem normal_equations(const std::vector<CMat> &C, const std::vector<CVec> &y,
                              const std::vector<double> &scales) {
  if (C.empty() || C.size() != y.size() || C.size() != scales.size())
    throw InvalidArgument("normal_equations: need one matrix, vector and scale per subcarrier");
  const Eigen::Index d = C.front().cols();
  NormalSystem ne;
  ne.Q = RMat::Zero(2 * d, 2 * d);
  ne.b = RVec::Zero(2 * d);
  CMat P(d, d);
  for (std::size_t n = 0; n < C.size(); ++n) {
    if (C[n].cols() != d || C[n].rows() != y[n].size())
      throw InvalidArgument("normal_equations: shape mismatch at subcarrier " + std::to_string(n));
    const double s = scales[n];
    P.setZero();
    P.selfadjointView<Eigen::Lower>().rankUpdate(C[n].adjoint());
    P.triangularView<Eigen::StrictlyUpper>() = P.adjoint();
    const RMat re = P.real();
    const RMat im = P.imag();
    ne.Q.topLeftCorner(d, d) += re;
    ne.Q.topRightCorner(d, d) -= s * im;
    ne.Q.bottomLeftCorner(d, d) += s * im;
    ne.Q.bottomRightCorner(d, d) += (s * s) * re;
    const CVec chy = C[n].adjoint() * y[n];
    ne.b.head(d) += chy.real();
    ne.b.tail(d) += s * chy.imag();
    ne.hh += y[n].squaredNorm();
  }
  return ne;
}

std::array<double, 2> group_soft_threshold(double a, double b, double t) {
  const double nrm = std::hypot(a, b);
  if (nrm <= t)
    return {0.0, 0.0};
  const double f = 1.0 - t / nrm;
  return {f * a, f * b};
}

std::array<double, 2> group_box_prox(double v1, double v2, double t, double upper1, double upper2) {
  // Over the nonnegative orthant the prox is the soft-threshold of the
  // clipped point; it is exact whenever the upper bounds stay inactive.
  auto z = group_soft_threshold(std::max(v1, 0.0), std::max(v2, 0.0), t);
  if (z[0] <= upper1 && z[1] <= upper2)
    return z;
  // Otherwise an upper bound is active at the minimizer: search both faces.
  auto phi = [&](double a, double b) {
    return 0.5 * ((a - v1) * (a - v1) + (b - v2) * (b - v2)) + t * std::hypot(a, b);
  };
  const std::array<double, 2> on1{upper1, face_minimizer(v2, upper1, t, upper2)};
  const std::array<double, 2> on2{face_minimizer(v1, upper2, t, upper1), upper2};
  return phi(on1[0], on1[1]) <= phi(on2[0], on2[1]) ? on1 : on2;
}

SolverResult solve_ls_box(const NormalSystem &sys, const RVec &upper, const SolverOptions &opts, const RVec *x0) {
  return prox_gradient(sys, 0.0, upper, opts, x0);
}

SolverResult solve_group_lasso_box(const NormalSystem &sys, double mu, const RVec &upper,
                                   const SolverOptions &opts, const RVec *x0) {
  return prox_gradient(sys, mu, upper, opts, x0);
}

SolverResult solve_cs_box(const NormalSystem &sys, double lambda, const RVec &upper, const SolverOptions &opts,
                          const RVec *x0) {
  if (lambda == 0.0)
    return prox_gradient(sys, 0.0, upper, opts, x0);
  return prox_gradient(sys, lambda, upper, opts, x0, DataTerm::Norm);
}

const char *variant_name(BimVariant v) { return v == BimVariant::LS ? "bim" : "bim-cs"; }

std::array<double, 2> BimConfig::upper_bounds(const PhysicsConfig &cfg) const {
  if (x_max)
    return *x_max;
  return {1.5, 0.1 / (2.0 * kPi * cfg.center_frequency * cfg.vacuum_permittivity)};
}

void BimConfig::validate() const {
  if (num_born_iters < 1)
    throw InvalidArgument("BimConfig: num_born_iters must be >= 1");
  if (cs_weight && !(*cs_weight >= 0.0))
    throw InvalidArgument("BimConfig: cs_weight must be >= 0");
  if (!(cs_weight_factor >= 0.0))
    throw InvalidArgument("BimConfig: cs_weight_factor must be >= 0");
  if (x_max && !((*x_max)[0] > 0.0 && (*x_max)[1] > 0.0))
    throw InvalidArgument("BimConfig: x_max must be > 0 elementwise");
  if (solver.max_iterations < 1 || !(solver.tolerance > 0.0))
    throw InvalidArgument("BimConfig: invalid inner solver options");
  if (max_step_halvings < 0)
    throw InvalidArgument("BimConfig: max_step_halvings must be >= 0");
}

BimResult bim(const ChannelSet &channels, const InversionOperators &ops, const BimConfig &cfg,
              BimVariant variant) {
  cfg.validate();
  if (channels.num_bs != ops.num_bs || channels.num_ue != ops.num_ue ||
      channels.num_antennas() != ops.num_antennas || channels.num_subcarriers() != ops.num_subcarriers())
    throw InvalidArgument("bim: channel set does not match the operator layout");

  const auto t0 = Clock::now();
  const int d = ops.num_pixels();
  const int nc = ops.num_subcarriers();
  const auto ub = cfg.upper_bounds(ops.physics);
  RVec upper(2 * d);
  upper.head(d).setConstant(ub[0]);
  upper.tail(d).setConstant(ub[1]);

  std::vector<CVec> y;
  std::vector<double> scales;
  for (int n = 0; n < nc; ++n) {
    y.push_back(stack_channels(channels, n));
    scales.push_back(ops.scale(n));
  }

  BimResult res;
  RVec x = RVec::Zero(2 * d);
  std::vector<CMat> C(static_cast<std::size_t>(nc));
  int stage = 0;

  // Rebuilds C around `z` and returns the data residual of `z`.
  auto assemble_at = [&](const RVec &z, std::vector<CMat> &out) {
    auto ta = Clock::now();
    for (int n = 0; n < nc; ++n) {
      const CVec chi = unknowns_to_contrast(z, scales[static_cast<std::size_t>(n)]);
      out[static_cast<std::size_t>(n)] = assemble_C(ops, n, &chi);
    }
    res.timings.assembly_s += seconds_since(ta);
    return relative_residual(out, y, z, ops);
  };
  auto solve_on = [&](const std::vector<CMat> &sys_C) {
    auto ta = Clock::now();
    const NormalSystem sys = normal_equations(sys_C, y, scales);
    res.timings.assembly_s += seconds_since(ta);
    auto ts = Clock::now();
    double lambda = 0.0;
    if (variant == BimVariant::CS)
      lambda = cfg.cs_weight ? *cfg.cs_weight
               : sys.hh > 0.0 ? cfg.cs_weight_factor * sys.b.lpNorm<Eigen::Infinity>() / std::sqrt(sys.hh)
                              : 0.0;
    const RVec warm = x;
    auto sol = solve_cs_box(sys, lambda, upper, cfg.solver, &warm);
    res.timings.solve_s += seconds_since(ts);
    res.cs_weights.push_back(lambda);
    res.inner_iterations.push_back(sol.iterations);
    res.fit_residuals.push_back(relative_residual(sys_C, y, sol.x, ops));
    return std::move(sol.x);
  };

  try {
    for (int n = 0; n < nc; ++n)
      C[static_cast<std::size_t>(n)] = assemble_C(ops, n);
    x = solve_on(C);
    double current = assemble_at(x, C);
    res.residuals.push_back(current);

    std::vector<CMat> trial_C(static_cast<std::size_t>(nc));
    for (stage = 1; stage <= cfg.num_born_iters; ++stage) {
      const RVec proposal = solve_on(C);
      if (!cfg.step_control) {
        x = proposal;
        current = assemble_at(x, C);
        res.residuals.push_back(current);
        continue;
      }
      // Damped update: halve the step until the data residual does not grow.
      bool accepted = false;
      double t = 1.0;
      for (int bt = 0; bt <= cfg.max_step_halvings && !accepted; ++bt, t *= 0.5) {
        const RVec trial = x + t * (proposal - x);
        const double r = assemble_at(trial, trial_C);
        if (r <= current) {
          x = trial;
          current = r;
          std::swap(C, trial_C);
          accepted = true;
        }
      }
      res.step_sizes.push_back(accepted ? 2.0 * t : 0.0);
      res.residuals.push_back(current);
      if (!accepted) {
        res.stalled = true;
        break;
      }
    }
  } catch (const NumericFailure &e) {
    throw NumericFailure("Born iteration " + std::to_string(stage) + ": " + e.what(), e.condition_estimate());
  }

  res.x = x;
  const double w = 2.0 * kPi * ops.physics.center_frequency * ops.physics.vacuum_permittivity;
  res.eps_r.resize(static_cast<std::size_t>(d));
  res.sigma.resize(static_cast<std::size_t>(d));
  for (int m = 0; m < d; ++m) {
    res.eps_r[static_cast<std::size_t>(m)] = 1.0 + x[m];
    res.sigma[static_cast<std::size_t>(m)] = w * x[d + m];
  }
  res.timings.total_s = seconds_since(t0);
  return res;
}

BimResult bim(const ChannelSet &channels, const RoiGrid &grid, const ViewLayout &layout,
              const PhysicsConfig &physics, const BimConfig &cfg, BimVariant variant) {
  return bim(channels, build_operators(grid, layout, physics), cfg, variant);
}

TargetScene bim_scene(const BimResult &r, const RoiGrid &grid) {
  if (static_cast<int>(r.eps_r.size()) != grid.num_pixels())
    throw InvalidArgument("bim_scene: image size differs from the grid");
  auto s = TargetScene::empty(grid);
  s.eps_r = r.eps_r;
  s.sigma = r.sigma;
  return s;
}

} // namespace mvsense
