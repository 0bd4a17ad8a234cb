#pragma once

// Instance normalization over time and its adaptive (style-conditioned)
// variant. For a channel c with W frames:
//
//   u_c     = (1/W) sum_w M_c[w]
//   sigma_c = sqrt((1/W) sum_w (M_c[w] - u_c)^2 + eps)
//   M'_c[w] = (M_c[w] - u_c) / sigma_c
//
// AdaIN rescales the normalized map with per-channel (gamma_c, beta_c).

#include "safn/nn/param.hpp"

namespace safn::nn {

inline constexpr double kDefaultNormEps = 1e-5;

template <class T>
struct ChannelStats {
  Mat<T> mean;   // 1 x C
  Mat<T> sigma;  // 1 x C, >= sqrt(eps)
  double eps = kDefaultNormEps;
};

template <class T>
struct InstanceNormCache {
  Mat<T> normalized;  // T x C
  Mat<T> sigma;       // 1 x C
};

template <class T>
ChannelStats<T> channel_stats(const Mat<T>& x, double eps = kDefaultNormEps) {
  require_shape(x.rows() >= 1, "instance_norm: need at least one frame");
  ChannelStats<T> s;
  s.eps = eps;
  s.mean = x.colwise().mean();
  const Mat<T> centered = x.rowwise() - s.mean.row(0);
  s.sigma = ((centered.array().square().colwise().sum() / static_cast<T>(x.rows())) + static_cast<T>(eps)).sqrt().matrix();
  return s;
}

template <class T>
Mat<T> instance_norm(const Mat<T>& x, double eps = kDefaultNormEps, InstanceNormCache<T>* cache = nullptr,
                     ChannelStats<T>* stats_out = nullptr) {
  ChannelStats<T> s = channel_stats(x, eps);
  Mat<T> y = ((x.rowwise() - s.mean.row(0)).array().rowwise() / s.sigma.array().row(0)).matrix();
  if (cache) {
    cache->normalized = y;
    cache->sigma = s.sigma;
  }
  if (stats_out) *stats_out = std::move(s);
  return y;
}

/// dx = (dy - mean(dy) - y * mean(dy * y)) / sigma, per channel.
template <class T>
Mat<T> instance_norm_backward(const Mat<T>& dy, const InstanceNormCache<T>& cache) {
  const Mat<T>& y = cache.normalized;
  const Mat<T> mean_dy = dy.colwise().mean();
  const Mat<T> mean_dy_y = (dy.array() * y.array()).colwise().mean().matrix();
  Mat<T> dx = (dy.rowwise() - mean_dy.row(0)) - (y.array().rowwise() * mean_dy_y.array().row(0)).matrix();
  return (dx.array().rowwise() / cache.sigma.array().row(0)).matrix();
}

template <class T>
struct AdainCache {
  InstanceNormCache<T> norm;
  Mat<T> gamma;
};

/// gamma, beta: 1 x C.
template <class T>
Mat<T> adain(const Mat<T>& x, const Mat<T>& gamma, const Mat<T>& beta, double eps = kDefaultNormEps,
             AdainCache<T>* cache = nullptr) {
  require_shape(gamma.rows() == 1 && beta.rows() == 1 && gamma.cols() == x.cols() && beta.cols() == x.cols(),
                "adain: style has " + std::to_string(gamma.cols()) + " channels, map has " + std::to_string(x.cols()));
  InstanceNormCache<T> nc;
  Mat<T> n = instance_norm(x, eps, &nc);
  Mat<T> y = (n.array().rowwise() * gamma.array().row(0)).matrix();
  y.rowwise() += beta.row(0);
  if (cache) {
    cache->norm = std::move(nc);
    cache->gamma = gamma;
  }
  return y;
}

template <class T>
struct AdainGrads {
  Mat<T> dx;
  Mat<T> dgamma;  // 1 x C
  Mat<T> dbeta;   // 1 x C
};

template <class T>
AdainGrads<T> adain_backward(const Mat<T>& dy, const AdainCache<T>& cache) {
  AdainGrads<T> g;
  g.dgamma = (dy.array() * cache.norm.normalized.array()).colwise().sum().matrix();
  g.dbeta = dy.colwise().sum();
  const Mat<T> dn = (dy.array().rowwise() * cache.gamma.array().row(0)).matrix();
  g.dx = instance_norm_backward(dn, cache.norm);
  return g;
}

}  // namespace safn::nn
