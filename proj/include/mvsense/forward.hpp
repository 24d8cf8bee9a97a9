#pragma once

#include "mvsense/common.hpp"
#include "mvsense/green.hpp"
#include "mvsense/layout.hpp"
#include "mvsense/physics.hpp"
#include "mvsense/scene.hpp"

#include <vector>

namespace mvsense {

/// CSI of one (BS, UE) view: N_r x N_c, column n is subcarrier n.
struct ChannelEntry {
  int bs_index = 0;
  int ue_index = 0;
  Vec2 bs_position;
  Vec2 ue_position;
  CMat H;
};

/// Multi-view CSI, entries ordered BS-major (index = b * U + u).
struct ChannelSet {
  int num_bs = 0;
  int num_ue = 0;
  std::vector<ChannelEntry> entries;

  const ChannelEntry &at(int b, int u) const { return entries.at(static_cast<std::size_t>(b * num_ue + u)); }
  ChannelEntry &at(int b, int u) { return entries.at(static_cast<std::size_t>(b * num_ue + u)); }
  int num_antennas() const { return entries.empty() ? 0 : static_cast<int>(entries.front().H.rows()); }
  int num_subcarriers() const { return entries.empty() ? 0 : static_cast<int>(entries.front().H.cols()); }
};

/// X = diag(chi) [I - G diag(chi)]^{-1}.
/// Throws NumericFailure when the bracket is numerically singular.
CMat scattering_operator(const GreenOperator &green, const CVec &chi);

/// Threshold on PartialPivLU::rcond() below which a MoM system is reported
/// as singular.
inline constexpr double kSingularRcond = 1e-13;

/// Solves [I - G_SS diag(chi_S)] E = rhs for the cells in `support`.
CMat solve_state_equation(const GreenKernel &kernel, const std::vector<LatticeCell> &support,
                          const CVec &chi_support, const CMat &rhs);

/// Total field [I - G diag(chi)]^{-1} * incident at every RoI pixel, for each
/// column of `incident` (D x K). Only pixels with nonzero contrast enter the
/// dense solve; the remaining pixels follow from the state equation.
CMat total_field(const GreenKernel &kernel, const RoiGrid &grid, const CVec &chi,
                 const CMat &incident);

enum class ScatteringModel {
  Full, // MoM solve
  Born, // X replaced by diag(chi)
};

struct ForwardOptions {
  ScatteringModel model = ScatteringModel::Full;
};

/// H_{b,u}: column n = H^{R-B}_{b,n} X_n h^{U-R}_{u,n}. Clutter cells are
/// included in the scattering domain.
CMat single_view_channel(const TargetScene &scene, const ViewLayout &layout, int b, int u,
                         const PhysicsConfig &cfg, ForwardOptions opts = {});

/// All B*U views. Deterministic; one MoM factorization per subcarrier.
ChannelSet multi_view_channels(const TargetScene &scene, const ViewLayout &layout,
                               const PhysicsConfig &cfg, ForwardOptions opts = {});

} // namespace mvsense
