#include "mvsense/link.hpp"

#include <cmath>
#include <limits>

namespace mvsense {

SnrModel SnrModel::for_physics(const PhysicsConfig &cfg) {
  SnrModel m;
  m.wavelength = cfg.center_wavelength();
  m.bandwidth = cfg.num_subcarriers * cfg.subcarrier_spacing;
  return m;
}

void SnrModel::validate() const {
  if (!(transmit_power > 0) || !(gain_tx > 0) || !(gain_rx > 0) || !(wavelength > 0) || !(rcs >= 0) ||
      !(range_tx > 0) || !(range_rx > 0) || !(temperature > 0) || !(boltzmann > 0) || !(bandwidth > 0))
    throw InvalidArgument("SnrModel: parameters must be positive");
}

double snr_linear(const SnrModel &m) {
  m.validate();
  const double four_pi = 4.0 * kPi;
  const double received = m.transmit_power * m.gain_tx * m.gain_rx * m.wavelength * m.wavelength * m.rcs /
                          (four_pi * four_pi * four_pi * m.range_tx * m.range_tx * m.range_rx * m.range_rx);
  return received / (m.boltzmann * m.temperature * m.bandwidth);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watt(double dbm) { return 1e-3 * db_to_linear(dbm); }

void PilotConfig::validate() const {
  if (num_symbols < 1)
    throw InvalidArgument("PilotConfig: num_symbols must be >= 1");
  if (std::isnan(snr_db))
    throw InvalidArgument("PilotConfig: snr_db is NaN");
  if (radar)
    radar->validate();
}

CVec qpsk_pilots(Rng &rng, int count) {
  static const double r = 1.0 / std::sqrt(2.0);
  std::uniform_int_distribution<int> sym(0, 3);
  CVec s(count);
  for (int l = 0; l < count; ++l) {
    const int v = sym(rng);
    s[l] = {(v & 1) ? -r : r, (v & 2) ? -r : r};
  }
  return s;
}

CMat simulate_rx(const CVec &h, const CVec &pilots, double noise_power, Rng &rng) {
  if (!(noise_power >= 0.0))
    throw InvalidArgument("simulate_rx: noise power must be >= 0");
  CMat y = h * pilots.transpose();
  if (noise_power > 0.0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * noise_power));
    for (Eigen::Index l = 0; l < y.cols(); ++l)
      for (Eigen::Index r = 0; r < y.rows(); ++r)
        y(r, l) += cdouble{gauss(rng), gauss(rng)};
  }
  return y;
}

CVec ls_estimate(const CMat &rx, const CVec &pilots) {
  if (rx.cols() != pilots.size())
    throw InvalidArgument("ls_estimate: pilot length does not match received block");
  const cdouble energy = pilots.transpose() * pilots.conjugate();
  if (std::abs(energy) == 0.0)
    throw InvalidArgument("ls_estimate: zero-energy pilot");
  return (rx * pilots.conjugate()) / energy;
}

double view_snr(const PilotConfig &pilot, Vec2 bs, Vec2 ue) {
  if (pilot.radar) {
    SnrModel m = *pilot.radar;
    m.range_tx = norm(ue);
    m.range_rx = norm(bs);
    return snr_linear(m);
  }
  return db_to_linear(pilot.snr_db);
}

ChannelSet estimate_channels(const ChannelSet &exact, const PilotConfig &pilot, std::uint64_t stream_index) {
  pilot.validate();
  ChannelSet out = exact;
  const std::uint64_t views = exact.entries.size();
  for (std::size_t v = 0; v < exact.entries.size(); ++v) {
    const auto &e = exact.entries[v];
    Rng rng = make_stream(pilot.seed, stream_index * views + v, Stream::Link);
    const double snr = view_snr(pilot, e.bs_position, e.ue_position);
    const double signal = e.H.size() > 0 ? e.H.squaredNorm() / static_cast<double>(e.H.size()) : 0.0;
    const double noise = std::isinf(snr) || signal == 0.0 ? 0.0 : signal / snr;
    for (Eigen::Index n = 0; n < e.H.cols(); ++n) {
      const CVec s = qpsk_pilots(rng, pilot.num_symbols);
      const CVec h = e.H.col(n);
      out.entries[v].H.col(n) = ls_estimate(simulate_rx(h, s, noise, rng), s);
    }
  }
  return out;
}

ChannelSet estimate_channel_set(const TargetScene &scene, const ViewLayout &layout, const PhysicsConfig &cfg,
                                const PilotConfig &pilot, std::uint64_t stream_index) {
  return estimate_channels(multi_view_channels(scene, layout, cfg), pilot, stream_index);
}

} // namespace mvsense
