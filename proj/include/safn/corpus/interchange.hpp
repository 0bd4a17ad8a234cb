#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "safn/core/container.hpp"
#include "safn/corpus/ema.hpp"

namespace safn {

inline constexpr int kInterchangeSchemaVersion = 1;
inline constexpr const char* kUtteranceMagic = "SAFN-UTTERANCE";
inline constexpr const char* kFeatureMagic = "SAFN-FEATURES";

struct Audio {
  std::vector<float> samples;
  double rate_hz = 16000.0;

  double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
};

struct Utterance {
  std::string id;
  std::string speaker_id;
  Audio audio;
  EmaTrajectory ema;

  /// Audio and EMA must describe the same stretch of time (within 50 ms).
  void check_durations(double tolerance_s = 0.05) const {
    if (audio.samples.empty()) return;
    const double d = std::abs(audio.duration_s() - ema.duration_s());
    if (d > tolerance_s)
      throw DataError("utterance " + id + ": audio and EMA durations differ by " + std::to_string(d * 1000) + " ms");
  }
};

namespace detail {

inline std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : " ") + n;
  return s;
}

inline std::vector<std::string> split_names(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline void check_schema(const HeaderBlock& h, const std::string& origin) {
  const auto v = h.get_int("schema_version");
  if (v != kInterchangeSchemaVersion)
    throw VersionError(origin + ": schema_version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(kInterchangeSchemaVersion) + ")");
}

inline void check_token(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_of(" \t\n") != std::string::npos)
    throw DataError(what + " must be a non-empty token without whitespace: '" + s + "'");
}

}  // namespace detail

inline std::string serialize_utterance(const Utterance& u) {
  detail::check_token(u.id, "utterance id");
  detail::check_token(u.speaker_id, "speaker id");
  u.ema.validate();
  Container c;
  c.header.magic = kUtteranceMagic;
  c.header.set("schema_version", std::to_string(kInterchangeSchemaVersion));
  c.header.set("id", u.id);
  c.header.set("speaker", u.speaker_id);
  c.header.set("audio_rate", format_double(u.audio.rate_hz));
  c.header.set("audio_samples", std::to_string(u.audio.samples.size()));
  c.header.set("ema_rate", format_double(u.ema.rate_hz));
  c.header.set("ema_frames", std::to_string(u.ema.frames()));
  c.header.set("ema_channels", std::to_string(u.ema.num_channels()));
  c.header.set("channel_names", detail::join_names(u.ema.channels));
  c.payload.reserve(u.audio.samples.size() + static_cast<std::size_t>(u.ema.data.size()));
  c.payload.insert(c.payload.end(), u.audio.samples.begin(), u.audio.samples.end());
  c.payload.insert(c.payload.end(), u.ema.data.data(), u.ema.data.data() + u.ema.data.size());
  return serialize_container(c);
}

inline Utterance parse_utterance(const std::string& bytes, const std::string& origin = "<memory>") {
  Container c = parse_container(bytes, kUtteranceMagic, origin);
  detail::check_schema(c.header, origin);
  Utterance u;
  u.id = c.header.get("id");
  u.speaker_id = c.header.get("speaker");
  u.audio.rate_hz = c.header.get_double("audio_rate");
  const auto n_audio = static_cast<std::size_t>(c.header.get_int("audio_samples"));
  u.ema.rate_hz = c.header.get_double("ema_rate");
  const auto T = c.header.get_int("ema_frames");
  const auto C = c.header.get_int("ema_channels");
  u.ema.channels = detail::split_names(c.header.get("channel_names"));
  if (c.payload.size() != n_audio + static_cast<std::size_t>(T * C))
    throw DataError(origin + ": payload size disagrees with declared audio/EMA sizes");
  u.audio.samples.assign(c.payload.begin(), c.payload.begin() + static_cast<std::ptrdiff_t>(n_audio));
  u.ema.data = Eigen::Map<const MatF>(c.payload.data() + n_audio, T, C);
  u.ema.validate();
  return u;
}

inline void write_interchange(const Utterance& u, const std::filesystem::path& path) {
  write_file(path, serialize_utterance(u));
}

inline Utterance read_interchange(const std::filesystem::path& path) {
  return parse_utterance(read_file(path), path.string());
}

/// Cached feature matrix (MFCC or model output) for one utterance.
struct FeatureFile {
  std::string id;
  std::string speaker_id;
  double frame_rate_hz = 100.0;
  std::vector<std::string> names;
  MatF data;
};

inline std::string serialize_features(const FeatureFile& f) {
  detail::check_token(f.id, "utterance id");
  detail::check_token(f.speaker_id, "speaker id");
  require_shape(static_cast<Eigen::Index>(f.names.size()) == f.data.cols(), "feature names do not match columns");
  Container c;
  c.header.magic = kFeatureMagic;
  c.header.set("schema_version", std::to_string(kInterchangeSchemaVersion));
  c.header.set("id", f.id);
  c.header.set("speaker", f.speaker_id);
  c.header.set("frame_rate", format_double(f.frame_rate_hz));
  c.header.set("frames", std::to_string(f.data.rows()));
  c.header.set("dims", std::to_string(f.data.cols()));
  c.header.set("names", detail::join_names(f.names));
  c.payload.assign(f.data.data(), f.data.data() + f.data.size());
  return serialize_container(c);
}

inline FeatureFile parse_features(const std::string& bytes, const std::string& origin = "<memory>") {
  Container c = parse_container(bytes, kFeatureMagic, origin);
  detail::check_schema(c.header, origin);
  FeatureFile f;
  f.id = c.header.get("id");
  f.speaker_id = c.header.get("speaker");
  f.frame_rate_hz = c.header.get_double("frame_rate");
  const auto T = c.header.get_int("frames");
  const auto D = c.header.get_int("dims");
  f.names = detail::split_names(c.header.get("names"));
  if (static_cast<long long>(c.payload.size()) != T * D) throw DataError(origin + ": feature payload size mismatch");
  f.data = Eigen::Map<const MatF>(c.payload.data(), T, D);
  return f;
}

inline void write_features(const FeatureFile& f, const std::filesystem::path& path) {
  write_file(path, serialize_features(f));
}

inline FeatureFile read_features(const std::filesystem::path& path) {
  return parse_features(read_file(path), path.string());
}

}  // namespace safn
