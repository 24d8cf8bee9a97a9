#pragma once

#include "mvsense/forward.hpp"
#include "mvsense/random.hpp"

#include <cstdint>
#include <optional>

namespace mvsense {

/// Radar-equation link budget.
struct SnrModel {
  double transmit_power = 0.19952623149688797; // W (23 dBm)
  double gain_tx = 1.9952623149688795;         // linear (3 dBi)
  double gain_rx = 1.9952623149688795;
  double wavelength = 0.099930819333333;       // m (3 GHz)
  double rcs = 1e-3;                           // m^2
  double range_tx = 10.0;                      // UE to target, m
  double range_rx = 100.0;                     // target to BS, m
  double temperature = 290.0;                  // K
  double boltzmann = 1.38e-23;                 // J/K
  double bandwidth = 800e3;                    // Hz, N_c * delta_f

  /// Defaults above with wavelength and bandwidth taken from `cfg`.
  static SnrModel for_physics(const PhysicsConfig &cfg);
  void validate() const;
};

/// (P_t G_t G_r lambda^2 rcs / ((4 pi)^3 R_t^2 R_r^2)) / (k T B).
double snr_linear(const SnrModel &model);

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watt(double dbm);

enum class Modulation { Qpsk };

struct PilotConfig {
  int num_symbols = 32;
  Modulation modulation = Modulation::Qpsk;
  /// Per-antenna SNR applied to every view. +infinity disables noise.
  double snr_db = 20.0;
  /// When set, each view's SNR comes from the radar equation with that
  /// view's UE and BS distances to the origin instead of `snr_db`.
  std::optional<SnrModel> radar;
  std::uint64_t seed = 0;

  void validate() const;
};

/// L unit-power QPSK symbols from {+-1 +-j}/sqrt(2).
CVec qpsk_pilots(Rng &rng, int count);

/// Y = h s^T + Z with Z_ij ~ CN(0, noise_power).
CMat simulate_rx(const CVec &h, const CVec &pilots, double noise_power, Rng &rng);

/// h_hat = Y s* (s^T s*)^{-1}. Throws InvalidArgument for a zero-energy pilot.
CVec ls_estimate(const CMat &rx, const CVec &pilots);

/// Per-view SNR (linear) under `pilot`, for a view with these positions.
double view_snr(const PilotConfig &pilot, Vec2 bs, Vec2 ue);

/// Transmits fresh pilots on every (b, u, n), adds noise calibrated so that
/// the view's mean received-signal power over the noise power equals the
/// view SNR, and LS-estimates each channel. `stream_index` separates the
/// random streams of different scenes under the same pilot seed.
ChannelSet estimate_channels(const ChannelSet &exact, const PilotConfig &pilot,
                             std::uint64_t stream_index = 0);

ChannelSet estimate_channel_set(const TargetScene &scene, const ViewLayout &layout,
                                const PhysicsConfig &cfg, const PilotConfig &pilot,
                                std::uint64_t stream_index = 0);

} // namespace mvsense
