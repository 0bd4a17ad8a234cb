#pragma once

#include "safn/frontend/mfcc.hpp"

namespace safn {

namespace detail {

// Regression delta over +-2 frames with replicated edges.
inline MatD regression_delta(const MatD& x) {
  const Eigen::Index T = x.rows();
  MatD d = MatD::Zero(T, x.cols());
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 1; k <= 2; ++k) {
      const Eigen::Index fwd = std::min(t + k, T - 1), back = std::max<Eigen::Index>(t - k, 0);
      d.row(t) += k * (x.row(fwd) - x.row(back));
    }
  return d / 10.0;
}

}  // namespace detail

/// Appends first and second regression deltas: D -> 3D columns.
inline AcousticFeatures append_deltas(const AcousticFeatures& f) {
  if (f.frames() < 5) throw DataError("delta features need at least 5 frames");
  const MatD x = f.data.cast<double>();
  const MatD d1 = detail::regression_delta(x);
  const MatD d2 = detail::regression_delta(d1);
  AcousticFeatures out;
  out.frame_rate_hz = f.frame_rate_hz;
  out.data.resize(f.frames(), 3 * f.dims());
  out.data << f.data, d1.cast<float>(), d2.cast<float>();
  out.feature_names = f.feature_names;
  for (const auto& n : f.feature_names) out.feature_names.push_back("d_" + n);
  for (const auto& n : f.feature_names) out.feature_names.push_back("dd_" + n);
  return out;
}

}  // namespace safn
