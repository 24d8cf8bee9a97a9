#pragma once

#include "mvsense/forward.hpp"
#include "mvsense/green.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mvsense {

/// Known measurement operators of the RoI for one layout: per subcarrier the
/// lattice kernel, the UE-to-pixel channels and the pixel-to-antenna channels.
struct InversionOperators {
  RoiGrid grid;
  PhysicsConfig physics;
  int num_bs = 0;
  int num_ue = 0;
  int num_antennas = 0;
  std::vector<double> frequencies;
  std::vector<GreenKernel> kernels;
  std::vector<CMat> incident; // D x U
  std::vector<CMat> receive;  // (B N_r) x D, row b * N_r + r

  int num_pixels() const { return grid.num_pixels(); }
  int num_subcarriers() const { return static_cast<int>(frequencies.size()); }
  int rows_per_subcarrier() const { return num_bs * num_antennas * num_ue; }
  /// f_c / f_n.
  double scale(int n) const { return physics.center_frequency / frequencies[static_cast<std::size_t>(n)]; }
};

InversionOperators build_operators(const RoiGrid &grid, const ViewLayout &layout, const PhysicsConfig &cfg);

/// vec(H_n) with H_n the (B N_r) x U matrix of subcarrier n, column-major:
/// entry u * (B N_r) + b * N_r + r.
CVec stack_channels(const ChannelSet &channels, int n);

/// C_n[(u, b, r), d] = H^{R-B}[(b, r), d] * E[d, u] with E the total field
/// [I - G diag(chi)]^{-1} H^{U-R}. Without `chi` the incident field is used
/// (first-order Born form). Throws NumericFailure if the bracket is singular.
CMat assemble_C(const InversionOperators &ops, int n, const CVec *chi = nullptr);

/// Unknowns x = [eps_r - 1; sigma / (2 pi f_c eps0)] stacked over pixels.
RVec scene_to_unknowns(const TargetScene &scene, const PhysicsConfig &cfg);
/// chi_n = x1 + j (f_c / f_n) x2.
CVec unknowns_to_contrast(const RVec &x, double scale);

/// Explicit real-imaginary separated system over all subcarriers. Block n
/// is [[Re C, -s Im C], [Im C, s Re C]] with s = f_c / f_n and the matching
/// right-hand side [Re y; Im y].
struct RealStackedSystem {
  RMat A;
  RVec h;
  std::vector<double> scales;
};

RealStackedSystem real_stack(const std::vector<CMat> &C, const std::vector<CVec> &y,
                             const std::vector<double> &scales);

/// Least-squares data term 0.5 ||h - A x||^2 = 0.5 x'Qx - b'x + 0.5 hh.
struct NormalSystem {
  RMat Q;
  RVec b;
  double hh = 0.0;

  Eigen::Index size() const { return b.size(); }
  double objective(const RVec &x) const;
};

NormalSystem normal_equations(const RealStackedSystem &sys);

/// Same system accumulated from P_n = C_n^H C_n without forming A.
NormalSystem normal_equations(const std::vector<CMat> &C, const std::vector<CVec> &y,
                              const std::vector<double> &scales);

struct SolverOptions {
  double tolerance = 1e-6; // on the unit-step prox-gradient map, inf-norm
  int max_iterations = 500;
};

struct SolverResult {
  RVec x;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0; // data term plus regularizer
};

/// Group soft-threshold of (a, b): scaled by max(0, 1 - t / ||(a, b)||).
std::array<double, 2> group_soft_threshold(double a, double b, double t);

/// Minimizer of 0.5 ||z - v||^2 + t ||z|| over 0 <= z <= upper.
std::array<double, 2> group_box_prox(double v1, double v2, double t, double upper1, double upper2);

/// Projected gradient with Barzilai-Borwein steps for
/// min 0.5 ||h - A x||^2 s.t. 0 <= x <= upper.
/// Throws NumericFailure when the objective rises over 10 consecutive steps.
SolverResult solve_ls_box(const NormalSystem &sys, const RVec &upper, const SolverOptions &opts = {},
                          const RVec *x0 = nullptr);

/// Proximal gradient for min 0.5 ||h - A x||^2 + mu ||x||_{1,2} s.t.
/// 0 <= x <= upper, where pixel d groups (x[d], x[D + d]).
SolverResult solve_group_lasso_box(const NormalSystem &sys, double mu, const RVec &upper,
                                   const SolverOptions &opts = {}, const RVec *x0 = nullptr);

/// Proximal gradient for min ||h - A x|| + lambda ||x||_{1,2} s.t.
/// 0 <= x <= upper (unsquared data norm). lambda = 0 falls back to the
/// squared least-squares solve, which has the same minimizer.
SolverResult solve_cs_box(const NormalSystem &sys, double lambda, const RVec &upper,
                          const SolverOptions &opts = {}, const RVec *x0 = nullptr);

enum class BimVariant { LS, CS };

const char *variant_name(BimVariant v);

struct BimConfig {
  int num_born_iters = 10;
  /// Absolute lambda; when unset, cs_weight_factor * ||A'h||_inf / ||h|| per
  /// solve, a fixed fraction of the weight above which x = 0 is optimal.
  std::optional<double> cs_weight;
  double cs_weight_factor = 0.01;
  /// Upper bounds for (eps_r - 1, sigma / (2 pi f_c eps0)); unset means
  /// (1.5, 0.1 / (2 pi f_c eps0)).
  std::optional<std::array<double, 2>> x_max;
  SolverOptions solver;
  /// Each Born update x <- x + t (x_new - x) starts at t = 1 and halves t
  /// (at most max_step_halvings times) until the data residual does not
  /// grow. When no step is accepted the iteration stops early.
  bool step_control = true;
  int max_step_halvings = 3;

  std::array<double, 2> upper_bounds(const PhysicsConfig &cfg) const;
  void validate() const;
};

struct BimTimings {
  double assembly_s = 0.0;
  double solve_s = 0.0;
  double total_s = 0.0;
};

struct BimResult {
  std::vector<double> eps_r; // per pixel
  std::vector<double> sigma;
  RVec x;
  /// Data residual ||h - A(x^(i)) x^(i)|| / ||h|| of each iterate
  /// i = 0 (Born) .. N_iter (fewer after a stall), with the operator rebuilt around that iterate,
  /// i.e. the forward-model misfit of the reconstruction.
  std::vector<double> residuals;
  /// Residual of each linearized solve, ||h - A x^(i)|| / ||h|| with A the
  /// operator the solve used (incident field for i = 0).
  std::vector<double> fit_residuals;
  std::vector<double> cs_weights; // per solve, 0 for LS
  std::vector<double> step_sizes; // accepted t per Born update, 0 if rejected
  bool stalled = false;           // stopped early: no step reduced the residual
  std::vector<int> inner_iterations;
  BimTimings timings;
};

BimResult bim(const ChannelSet &channels, const InversionOperators &ops, const BimConfig &cfg,
              BimVariant variant);

BimResult bim(const ChannelSet &channels, const RoiGrid &grid, const ViewLayout &layout,
              const PhysicsConfig &physics, const BimConfig &cfg, BimVariant variant);

/// Reconstructed images as a scene on `grid` (no clutter).
TargetScene bim_scene(const BimResult &r, const RoiGrid &grid);

} // namespace mvsense
