#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "safn/core/types.hpp"
#include "safn/corpus/interchange.hpp"

namespace safn {

struct AcousticFeatures {
  MatF data;  // frames x dims
  double frame_rate_hz = 100.0;
  std::vector<std::string> feature_names;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index dims() const { return data.cols(); }

  void validate() const {
    if (data.rows() < 1) throw DataError("acoustic features are empty");
    if (!data.allFinite()) throw NumericError("acoustic features contain NaN or Inf");
    require_shape(static_cast<Eigen::Index>(feature_names.size()) == data.cols(), "feature names do not match columns");
  }
};

struct MfccConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int num_ceps = 13;
  int num_mel_filters = 26;
  double preemphasis = 0.97;
  double low_hz = 0.0;
  double high_hz = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;

  int window_samples(double rate) const { return static_cast<int>(std::lround(window_ms * 1e-3 * rate)); }
  int hop_samples(double rate) const { return static_cast<int>(std::lround(hop_ms * 1e-3 * rate)); }
};

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Triangular mel filters over FFT bins, rows = filters.
inline MatD mel_filterbank(int n_filters, int fft_size, double rate, double low_hz, double high_hz) {
  const int n_bins = fft_size / 2 + 1;
  MatD fb = MatD::Zero(n_filters, n_bins);
  const double mlo = hz_to_mel(low_hz), mhi = hz_to_mel(high_hz);
  std::vector<double> edges(static_cast<std::size_t>(n_filters + 2));
  for (int i = 0; i < n_filters + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(mlo + (mhi - mlo) * i / (n_filters + 1));
  for (int m = 0; m < n_filters; ++m) {
    const double l = edges[static_cast<std::size_t>(m)], c = edges[static_cast<std::size_t>(m + 1)],
                 r = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * rate / fft_size;
      if (f > l && f < r) fb(m, k) = f <= c ? (f - l) / (c - l) : (r - f) / (r - c);
    }
  }
  return fb;
}

}  // namespace detail

/// Static MFCCs: pre-emphasis, Hamming window, power spectrum, mel
/// filterbank, floored log, orthonormal DCT-II (c0 kept).
/// Frame count is floor((n - window) / hop) + 1.
inline AcousticFeatures compute_mfcc(const Audio& audio, const MfccConfig& cfg = {}) {
  if (audio.rate_hz < 8000) throw DataError("MFCC needs audio sampled at >= 8 kHz");
  const int win = cfg.window_samples(audio.rate_hz);
  const int hop = cfg.hop_samples(audio.rate_hz);
  if (win < 2 || hop < 1) throw ConfigError("MFCC window/hop too short");
  const auto n = static_cast<long>(audio.samples.size());
  if (n < win) throw DataError("audio shorter than one analysis window");
  const long T = (n - win) / hop + 1;
  const int fft_size = detail::next_pow2(win);
  const double high = cfg.high_hz > 0 ? cfg.high_hz : audio.rate_hz / 2;
  const MatD fb = detail::mel_filterbank(cfg.num_mel_filters, fft_size, audio.rate_hz, cfg.low_hz, high);
  const int M = cfg.num_mel_filters;

  MatD dct(cfg.num_ceps, M);
  for (int k = 0; k < cfg.num_ceps; ++k)
    for (int m = 0; m < M; ++m)
      dct(k, m) = std::sqrt((k == 0 ? 1.0 : 2.0) / M) * std::cos(std::numbers::pi * k * (m + 0.5) / M);

  std::vector<double> emph(static_cast<std::size_t>(n));
  emph[0] = audio.samples[0];
  for (long i = 1; i < n; ++i)
    emph[static_cast<std::size_t>(i)] = audio.samples[static_cast<std::size_t>(i)] - cfg.preemphasis * audio.samples[static_cast<std::size_t>(i - 1)];

  std::vector<double> window(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    window[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (win - 1));

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(fft_size));
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(fft_size / 2 + 1);

  AcousticFeatures out;
  out.frame_rate_hz = audio.rate_hz / hop;
  out.data.resize(T, cfg.num_ceps);
  for (int k = 0; k < cfg.num_ceps; ++k) out.feature_names.push_back("c" + std::to_string(k));
  for (long t = 0; t < T; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int i = 0; i < win; ++i)
      frame[static_cast<std::size_t>(i)] = emph[static_cast<std::size_t>(t * hop + i)] * window[static_cast<std::size_t>(i)];
    fft.fwd(spec, frame);
    for (int k = 0; k <= fft_size / 2; ++k) power(k) = std::norm(spec[static_cast<std::size_t>(k)]);
    Eigen::VectorXd logmel = (fb * power).array().max(cfg.log_floor).log().matrix();
    out.data.row(t) = (dct * logmel).cast<float>().transpose();
  }
  return out;
}

}  // namespace safn
