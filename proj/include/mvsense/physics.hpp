#pragma once

#include "mvsense/common.hpp"

#include <vector>

namespace mvsense {

/// Free-space constants and the OFDM subcarrier plan.
///
/// Subcarriers are centered on `center_frequency`:
///   f_n = f_c + (n - (N_c - 1) / 2) * delta_f,  n = 0 .. N_c - 1.
struct PhysicsConfig {
  double center_frequency = 3.0e9;    // Hz
  double subcarrier_spacing = 100.0e3; // Hz
  int num_subcarriers = 8;
  double vacuum_permittivity = 8.8541878128e-12; // F/m
  double vacuum_permeability = 1.25663706212e-6;  // H/m
  double speed_of_light = 299792458.0;            // m/s

  /// sqrt(mu0 / eps0); derived, never stored.
  double impedance() const;
  double subcarrier_frequency(int n) const;
  std::vector<double> frequencies() const;
  double center_wavelength() const { return speed_of_light / center_frequency; }

  /// Throws InvalidArgument on a malformed configuration.
  void validate() const;
};

/// k = 2*pi*f/c.
double wavenumber(double frequency, const PhysicsConfig &cfg);

/// chi = (eps_r - 1) + j*sigma/(2*pi*f*eps0), evaluated for one pixel.
cdouble pixel_contrast(double eps_r, double sigma, double frequency,
                       const PhysicsConfig &cfg);

} // namespace mvsense
