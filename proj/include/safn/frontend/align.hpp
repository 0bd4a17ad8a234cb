#pragma once

#include <cmath>
#include <utility>

#include "safn/corpus/ema.hpp"
#include "safn/frontend/mfcc.hpp"

namespace safn {

/// Linear-interpolation resampling of every channel. Output frame i sits at
/// time i / new_rate.
inline EmaTrajectory resample_ema(const EmaTrajectory& ema, double new_rate_hz) {
  if (!(new_rate_hz > 0)) throw ConfigError("resample rate must be positive");
  if (ema.rate_hz == new_rate_hz) return ema;
  const Eigen::Index T = ema.frames();
  const double ratio = ema.rate_hz / new_rate_hz;
  const auto T_out = static_cast<Eigen::Index>(std::floor(static_cast<double>(T - 1) / ratio + 1e-9)) + 1;
  EmaTrajectory out;
  out.channels = ema.channels;
  out.rate_hz = new_rate_hz;
  out.data.resize(T_out, ema.num_channels());
  for (Eigen::Index i = 0; i < T_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto t0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), T - 1);
    const auto t1 = std::min<Eigen::Index>(t0 + 1, T - 1);
    const double frac = pos - static_cast<double>(t0);
    for (Eigen::Index c = 0; c < ema.num_channels(); ++c)
      out.data(i, c) = static_cast<float>((1 - frac) * ema.data(t0, c) + frac * ema.data(t1, c));
  }
  return out;
}

struct AlignedStreams {
  AcousticFeatures features;
  EmaTrajectory ema;
};

/// Resamples EMA to the feature frame rate and truncates both streams to the
/// shorter length. Fails if the lengths disagree by more than `max_mismatch`
/// (relative to the longer stream) after resampling.
inline AlignedStreams align_frames(const AcousticFeatures& features, const EmaTrajectory& ema,
                                   double max_mismatch = 0.10) {
  EmaTrajectory res = resample_ema(ema, features.frame_rate_hz);
  const Eigen::Index a = features.frames(), b = res.frames();
  const Eigen::Index n = std::min(a, b);
  if (static_cast<double>(std::max(a, b) - n) > max_mismatch * static_cast<double>(std::max(a, b)))
    throw DataError("feature/EMA length mismatch after resampling: " + std::to_string(a) + " vs " + std::to_string(b));
  AlignedStreams out{features, std::move(res)};
  out.features.data.conservativeResize(n, Eigen::NoChange);
  out.ema.data.conservativeResize(n, Eigen::NoChange);
  return out;
}

}  // namespace safn
