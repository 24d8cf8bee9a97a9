#include "mvsense/physics.hpp"

#include <cmath>
#include <string>

namespace mvsense {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double PhysicsConfig::impedance() const {
  return std::sqrt(vacuum_permeability / vacuum_permittivity);
}

double PhysicsConfig::subcarrier_frequency(int n) const {
  return center_frequency + (n - 0.5 * (num_subcarriers - 1)) * subcarrier_spacing;
}

std::vector<double> PhysicsConfig::frequencies() const {
  std::vector<double> f(static_cast<std::size_t>(num_subcarriers));
  for (int n = 0; n < num_subcarriers; ++n)
    f[static_cast<std::size_t>(n)] = subcarrier_frequency(n);
  return f;
}

void PhysicsConfig::validate() const {
  if (num_subcarriers < 1)
    throw InvalidArgument("num_subcarriers must be >= 1");
  if (!(subcarrier_spacing > 0.0))
    throw InvalidArgument("subcarrier_spacing must be > 0");
  if (!(center_frequency > 0.0) || !(vacuum_permittivity > 0.0) ||
      !(vacuum_permeability > 0.0) || !(speed_of_light > 0.0))
    throw InvalidArgument("physical constants must be positive");
  if (subcarrier_frequency(0) <= 0.0)
    throw InvalidArgument("lowest subcarrier frequency is not positive");
}

double wavenumber(double frequency, const PhysicsConfig &cfg) {
  if (!(frequency > 0.0))
    throw InvalidArgument("wavenumber: frequency must be positive, got " + std::to_string(frequency));
  return 2.0 * kPi * frequency / cfg.speed_of_light;
}

cdouble pixel_contrast(double eps_r, double sigma, double frequency, const PhysicsConfig &cfg) {
  return {eps_r - 1.0, sigma / (2.0 * kPi * frequency * cfg.vacuum_permittivity)};
}

} // namespace mvsense
