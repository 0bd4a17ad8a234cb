#pragma once

// Desk-scale parallel corpus with known ground truth.
//
// Generative process, per sentence:
//   1. draw a phone sequence (no immediate repeats) and a duration per phone;
//   2. build the frame-level one-hot matrix H (frames x phones) at the EMA rate
//      and smooth it along time with a normalized Hann kernel (replicated
//      edges), giving S;
//   3. EMA = S * targets + channel offsets, where targets holds one 12-channel
//      articulator vector per phone (shared by all speakers);
//   4. acoustic parameters (4 formant frequencies and amplitudes) = S * table;
//      a speaker scales the formant frequencies by its shift factor, applies a
//      spectral tilt and a gain, and voices the result as a harmonic series at
//      its own f0.
//
// EMA is therefore linear in the smoothed phone one-hots and identical across
// speakers reading the same sentence, while the audio is speaker-coloured.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "safn/corpus/ema.hpp"
#include "safn/corpus/interchange.hpp"
#include "safn/corpus/manifest.hpp"

namespace safn {

struct SynthConfig {
  std::string name = "synth";
  int n_speakers = 4;
  int n_utterances = 100;  // sentences; every speaker reads every sentence
  int n_phones = 8;
  int min_phones = 6;
  int max_phones = 12;
  int min_phone_frames = 6;
  int max_phone_frames = 14;
  int kernel_frames = 9;
  double ema_rate_hz = 100.0;
  double audio_rate_hz = 16000.0;
  double speaker_shift_scale = 0.1;     // formant scale factor in [1 - s, 1 + s]
  double speaker_tilt_db_per_khz = 3.0;  // tilt in [-x, x]
  double speaker_gain_db = 6.0;          // gain in [-x, x]

  void validate() const {
    if (n_speakers < 1) throw ConfigError("synth: n_speakers must be >= 1");
    if (n_utterances < 1) throw ConfigError("synth: n_utterances must be >= 1");
    if (n_phones < 2) throw ConfigError("synth: phone inventory must hold at least 2 phones");
    if (min_phones < 1 || max_phones < min_phones) throw ConfigError("synth: bad phones-per-utterance range");
    if (min_phone_frames < 1 || max_phone_frames < min_phone_frames)
      throw ConfigError("synth: bad phone duration range");
    if (kernel_frames < 1) throw ConfigError("synth: kernel_frames must be >= 1");
    if (!(ema_rate_hz > 0) || !(audio_rate_hz >= 8000)) throw ConfigError("synth: bad sampling rates");
  }
};

struct SynthSpeaker {
  std::string id;
  double formant_shift = 1.0;
  double tilt_db_per_khz = 0.0;
  double gain_db = 0.0;
  double f0_hz = 120.0;
};

struct SynthCorpus {
  std::string name;
  std::vector<SynthSpeaker> speakers;
  std::vector<Utterance> utterances;
  std::vector<int> sentence_of;                // sentence index per utterance
  std::vector<std::vector<int>> phone_frames;  // per sentence, phone id per EMA frame
  std::vector<MatD> smoothed_onehots;          // per sentence, frames x phones
  MatD targets;                                // phones x 12 articulator targets (mm)
  RowVec<double> offsets;                      // 12 channel offsets (mm)
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa from one draw; avoids implementation-defined distributions.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::vector<double> hann_kernel(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * (i + 1) / (n + 1));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Convolves every column with `kernel` (centred, replicated edges).
inline MatD smooth_columns(const MatD& x, const std::vector<double>& kernel) {
  const Eigen::Index T = x.rows();
  const int half = static_cast<int>(kernel.size()) / 2;
  MatD out = MatD::Zero(T, x.cols());
  for (Eigen::Index t = 0; t < T; ++t)
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      Eigen::Index src = t + static_cast<Eigen::Index>(k) - half;
      src = std::clamp<Eigen::Index>(src, 0, T - 1);
      out.row(t) += kernel[k] * x.row(src);
    }
  return out;
}

}  // namespace detail

inline SynthCorpus synth_corpus_in_memory(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  constexpr int kFormants = 4;
  const double formant_lo[kFormants] = {250, 800, 2200, 3300};
  const double formant_hi[kFormants] = {850, 2400, 3200, 4200};
  const double bandwidth[kFormants] = {80, 120, 160, 200};
  const double channel_scale[12] = {2, 3, 2, 3, 1.5, 2.5, 5, 5, 5, 5, 5, 5};
  const double channel_offset[12] = {0, 10, 0, -10, -2, -15, -10, 5, -25, 8, -40, 2};

  std::mt19937_64 rng(seed);
  SynthCorpus out;
  out.name = cfg.name;
  const int P = cfg.n_phones;

  out.targets.resize(P, 12);
  for (int p = 0; p < P; ++p)
    for (int c = 0; c < 12; ++c) out.targets(p, c) = channel_scale[c] * detail::uniform(rng, -1.0, 1.0);
  out.offsets.resize(12);
  for (int c = 0; c < 12; ++c) out.offsets(c) = channel_offset[c];

  MatD formants(P, kFormants), amps(P, kFormants);
  for (int p = 0; p < P; ++p)
    for (int j = 0; j < kFormants; ++j) {
      formants(p, j) = detail::uniform(rng, formant_lo[j], formant_hi[j]);
      amps(p, j) = detail::uniform(rng, 0.3, 1.0);
    }

  for (int k = 0; k < cfg.n_speakers; ++k) {
    SynthSpeaker s;
    char buf[16];
    std::snprintf(buf, sizeof buf, "spk%02d", k + 1);
    s.id = buf;
    s.formant_shift = 1.0 + cfg.speaker_shift_scale * detail::uniform(rng, -1.0, 1.0);
    s.tilt_db_per_khz = cfg.speaker_tilt_db_per_khz * detail::uniform(rng, -1.0, 1.0);
    s.gain_db = cfg.speaker_gain_db * detail::uniform(rng, -1.0, 1.0);
    s.f0_hz = detail::uniform(rng, 100.0, 220.0);
    out.speakers.push_back(s);
  }

  const auto kernel = detail::hann_kernel(cfg.kernel_frames);
  for (int u = 0; u < cfg.n_utterances; ++u) {
    const int n = detail::uniform_int(rng, cfg.min_phones, cfg.max_phones);
    std::vector<int> frames;
    int prev = -1;
    for (int i = 0; i < n; ++i) {
      int ph = detail::uniform_int(rng, 0, P - 1);
      if (ph == prev) ph = (ph + 1) % P;
      prev = ph;
      const int dur = detail::uniform_int(rng, cfg.min_phone_frames, cfg.max_phone_frames);
      frames.insert(frames.end(), static_cast<std::size_t>(dur), ph);
    }
    MatD onehot = MatD::Zero(static_cast<Eigen::Index>(frames.size()), P);
    for (std::size_t t = 0; t < frames.size(); ++t) onehot(static_cast<Eigen::Index>(t), frames[t]) = 1.0;
    out.smoothed_onehots.push_back(detail::smooth_columns(onehot, kernel));
    out.phone_frames.push_back(std::move(frames));
  }

  const double fs = cfg.audio_rate_hz;
  const double nyquist_guard = std::min(0.45 * fs, 5000.0);
  for (const auto& spk : out.speakers) {
    for (int u = 0; u < cfg.n_utterances; ++u) {
      const MatD& S = out.smoothed_onehots[static_cast<std::size_t>(u)];
      const Eigen::Index T = S.rows();
      Utterance utt;
      char buf[32];
      std::snprintf(buf, sizeof buf, "_u%04d", u);
      utt.id = spk.id + buf;
      utt.speaker_id = spk.id;
      utt.ema.channels = canonical_channels();
      utt.ema.rate_hz = cfg.ema_rate_hz;
      MatD ema = S * out.targets;
      ema.rowwise() += out.offsets;
      utt.ema.data = ema.cast<float>();

      const MatD F = S * formants * spk.formant_shift;
      const MatD A = S * amps;
      const auto n_samples = static_cast<std::size_t>(std::llround(static_cast<double>(T) * fs / cfg.ema_rate_hz));
      const int n_harm = static_cast<int>(nyquist_guard / spk.f0_hz);
      const double gain = 0.02 * std::pow(10.0, spk.gain_db / 20.0);
      std::vector<double> harm_gain(static_cast<std::size_t>(n_harm));
      for (int h = 1; h <= n_harm; ++h)
        harm_gain[static_cast<std::size_t>(h - 1)] = std::pow(10.0, spk.tilt_db_per_khz * (h * spk.f0_hz / 1000.0) / 20.0);
      utt.audio.rate_hz = fs;
      utt.audio.samples.resize(n_samples);
      for (std::size_t i = 0; i < n_samples; ++i) {
        const double pos = static_cast<double>(i) * cfg.ema_rate_hz / fs;
        const auto t0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), T - 1);
        const auto t1 = std::min<Eigen::Index>(t0 + 1, T - 1);
        const double frac = pos - static_cast<double>(t0);
        double f[kFormants], a[kFormants];
        for (int j = 0; j < kFormants; ++j) {
          f[j] = (1 - frac) * F(t0, j) + frac * F(t1, j);
          a[j] = (1 - frac) * A(t0, j) + frac * A(t1, j);
        }
        const double theta = 2 * std::numbers::pi * spk.f0_hz * static_cast<double>(i) / fs;
        const std::complex<double> step = std::polar(1.0, theta);
        std::complex<double> z = step;
        double acc = 0;
        for (int h = 1; h <= n_harm; ++h, z *= step) {
          const double fh = h * spk.f0_hz;
          double env = 0;
          for (int j = 0; j < kFormants; ++j) {
            const double d = (fh - f[j]) / (bandwidth[j] * spk.formant_shift);
            env += a[j] / (1 + d * d);
          }
          acc += env * harm_gain[static_cast<std::size_t>(h - 1)] * z.imag();
        }
        utt.audio.samples[i] = static_cast<float>(gain * acc);
      }
      out.sentence_of.push_back(u);
      out.utterances.push_back(std::move(utt));
    }
  }
  return out;
}

/// Writes one interchange file per utterance plus `manifest.txt` into `dir`.
inline CorpusManifest write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  CorpusManifest m;
  m.name = corpus.name;
  m.root = dir;
  for (const auto& s : corpus.speakers) m.speakers.push_back(s.id);
  for (const auto& u : corpus.utterances) {
    const std::filesystem::path rel = std::filesystem::path(u.speaker_id) / (u.id + ".utt");
    write_interchange(u, dir / rel);
    m.utterances.push_back({u.id, u.speaker_id, rel});
  }
  write_manifest(m, dir / "manifest.txt");
  return m;
}

inline CorpusManifest synth_corpus(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
  return write_synth_corpus(synth_corpus_in_memory(cfg, seed), dir);
}

}  // namespace safn
