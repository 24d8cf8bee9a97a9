#pragma once

#include "mvsense/common.hpp"
#include "mvsense/grid.hpp"
#include "mvsense/layout.hpp"
#include "mvsense/physics.hpp"

#include <span>
#include <vector>

namespace mvsense {

/// H0^(1)(x) = J0(x) + j Y0(x), x > 0.
cdouble hankel1_0(double x);
/// H1^(1)(x) = J1(x) + j Y1(x), x > 0.
cdouble hankel1_1(double x);

/// Interaction kernel of the pixel lattice at one wavenumber.
///
/// Pixels are replaced by equal-area circles of radius a. For distinct
/// cells the entry is (j k pi a / 2) J1(k a) H0(k d); the self term is
/// (j k pi a / 2) H1(k a) - 1. Because cells sit on a lattice, the
/// off-diagonal value depends only on the integer offset, so values are
/// tabulated once per |dx|, |dy| up to `max_offset`. Immutable after
/// construction and safe to share between threads.
class GreenKernel {
public:
  GreenKernel(double pixel_side, double k, int max_offset);

  double wavenumber() const { return k_; }
  double equivalent_radius() const { return a_; }
  int max_offset() const { return max_offset_; }
  /// (j k pi a / 2) J1(k a): weight applied to a point-to-pixel Hankel kernel.
  cdouble quadrature_weight() const { return weight_; }
  cdouble self_term() const { return self_; }

  cdouble operator()(LatticeCell a, LatticeCell b) const;

  /// Dense block G[rows, cols] over lattice cells.
  CMat block(std::span<const LatticeCell> rows, std::span<const LatticeCell> cols) const;

private:
  double k_;
  double a_;
  int max_offset_;
  cdouble weight_;
  cdouble self_;
  std::vector<cdouble> table_; // (max_offset+1)^2, indexed [dx][dy]
};

/// Discretized Green's operator of the full RoI at one subcarrier.
struct GreenOperator {
  int frequency_index = 0;
  double frequency = 0.0;
  double wavenumber = 0.0;
  CMat matrix; // D x D
};

/// Largest |dx| or |dy| between any two of `cells`.
int max_lattice_offset(std::span<const LatticeCell> cells);

GreenOperator green_matrix(const RoiGrid &grid, double frequency, const PhysicsConfig &cfg,
                           int frequency_index = 0);

/// j k eta g(r_m, p) at each point r_m, with g = (j/4) H0(k |r - p|).
CVec incident_field_at(std::span<const Vec2> points, Vec2 source, double k, double eta);

/// Channel from a UE at `ue` to every RoI pixel. The UE must be outside the RoI.
CVec incident_channel(const RoiGrid &grid, Vec2 ue, double frequency, const PhysicsConfig &cfg);

/// Rows = receivers, cols = points: weight * H0(k |rx - r_m|).
CMat receive_kernel_at(std::span<const Vec2> receivers, std::span<const Vec2> points, double k,
                       cdouble weight);

/// Channel from every RoI pixel to the antennas of BS b (N_r x D).
CMat rx_channel(const RoiGrid &grid, const ViewLayout &layout, int b, double frequency,
                const PhysicsConfig &cfg);

} // namespace mvsense
