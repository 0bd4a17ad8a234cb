#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "safn/corpus/ema.hpp"

namespace safn {

/// One second-order (or first-order, b2 = a2 = 0) section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;

  double dc_gain() const { return (b0 + b1 + b2) / (1 + a1 + a2); }
};

/// Digital Butterworth low-pass via the bilinear transform, as cascaded
/// sections.
inline std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(cutoff_hz > 0) || cutoff_hz >= rate_hz / 2)
    throw ConfigError("low-pass cutoff must lie in (0, Nyquist); got " + std::to_string(cutoff_hz) + " Hz at " +
                      std::to_string(rate_hz) + " Hz");
  const double K = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  std::vector<Biquad> sos;
  for (int k = 0; k < order / 2; ++k) {
    const double q = 1.0 / (2.0 * std::sin(std::numbers::pi * (2 * k + 1) / (2.0 * order)));
    const double norm = 1.0 / (1.0 + K / q + K * K);
    const double b0 = K * K * norm;
    sos.push_back({b0, 2 * b0, b0, 2 * (K * K - 1) * norm, (1 - K / q + K * K) * norm});
  }
  if (order % 2 == 1) {
    const double b0 = K / (1 + K);
    sos.push_back({b0, b0, 0, (K - 1) / (K + 1), 0});
  }
  return sos;
}

namespace detail {

// Direct form II transposed, state initialised to the steady state for x[0].
inline void sos_filter(const std::vector<Biquad>& sos, std::vector<double>& x) {
  if (x.empty()) return;
  for (const auto& s : sos) {
    const double y0 = s.dc_gain() * x[0];
    double z2 = s.b2 * x[0] - s.a2 * y0;
    double z1 = s.b1 * x[0] - s.a1 * y0 + z2;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

}  // namespace detail

/// Zero-phase (forward-backward) filtering of a single signal with odd
/// reflection padding at both ends.
inline std::vector<double> filtfilt(const std::vector<Biquad>& sos, const std::vector<double>& x) {
  const auto n = static_cast<long>(x.size());
  if (n == 0) return {};
  const long pad = std::min<long>(3 * (2 * static_cast<long>(sos.size()) + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(static_cast<std::size_t>(n + 2 * pad));
  for (long i = pad; i >= 1; --i) ext.push_back(2 * x[0] - x[static_cast<std::size_t>(i)]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (long i = 1; i <= pad; ++i) ext.push_back(2 * x[static_cast<std::size_t>(n - 1)] - x[static_cast<std::size_t>(n - 1 - i)]);
  detail::sos_filter(sos, ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + pad, ext.begin() + pad + n};
}

struct LowpassOptions {
  double cutoff_hz = 20.0;
  int order = 4;
};

inline EmaTrajectory lowpass_ema(const EmaTrajectory& ema, const LowpassOptions& opts = {}) {
  const auto sos = butterworth_lowpass(opts.order, opts.cutoff_hz, ema.rate_hz);
  EmaTrajectory out = ema;
  std::vector<double> col(static_cast<std::size_t>(ema.frames()));
  for (Eigen::Index c = 0; c < ema.num_channels(); ++c) {
    for (Eigen::Index t = 0; t < ema.frames(); ++t) col[static_cast<std::size_t>(t)] = ema.data(t, c);
    const auto y = filtfilt(sos, col);
    for (Eigen::Index t = 0; t < ema.frames(); ++t) out.data(t, c) = static_cast<float>(y[static_cast<std::size_t>(t)]);
  }
  return out;
}

inline EmaTrajectory lowpass_ema(const EmaTrajectory& ema, double cutoff_hz) {
  return lowpass_ema(ema, LowpassOptions{cutoff_hz, 4});
}

}  // namespace safn
