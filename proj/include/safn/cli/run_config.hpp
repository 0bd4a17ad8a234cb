#pragma once

// Run configuration: one flat `key = value` text file (dotted keys, `#`
// comments), overridden by `--set key=value`; every key has a default.
// The hash is taken over the sorted key/value list, so it does not depend
// on the order keys appear in the file.

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "safn/corpus/synth.hpp"
#include "safn/training/scenario.hpp"

namespace safn {

struct RunConfig {
  std::string manifest;  // corpus manifest path
  std::string out = "runs";
  std::uint64_t seed = 0;
  ScenarioSpec scenario;
  AblationVariant variant;
  SynthConfig synth;
  ScenarioConfig model;

  ScenarioSpec scenario_spec() const {
    ScenarioSpec s = scenario;
    s.seed = seed;
    return s;
  }
};

namespace config_detail {

struct Binding {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof()) throw ConfigError(key + ": cannot parse '" + v + "' as a number");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

#define SAFN_BIND_NUM(KEY, EXPR, TYPE)                                                                 \
  Binding {                                                                                           \
    KEY, [](const RunConfig& c) { return format_double(static_cast<double>(c.EXPR)); },               \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<TYPE>(KEY, v); }               \
  }
#define SAFN_BIND_INT(KEY, EXPR, TYPE)                                                                 \
  Binding {                                                                                           \
    KEY, [](const RunConfig& c) { return std::to_string(c.EXPR); },                                   \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<TYPE>(KEY, v); }               \
  }
#define SAFN_BIND_BOOL(KEY, EXPR)                                                                      \
  Binding {                                                                                           \
    KEY, [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); },                   \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(KEY, v); }                       \
  }
#define SAFN_BIND_STR(KEY, EXPR)                                                                       \
  Binding {                                                                                           \
    KEY, [](const RunConfig& c) { return std::string(c.EXPR); }, [](RunConfig& c, const std::string& v) { c.EXPR = v; } \
  }
#define SAFN_BIND_LIST(KEY, EXPR)                                                                      \
  Binding {                                                                                           \
    KEY, [](const RunConfig& c) { return join_ints(c.EXPR); },                                        \
        [](RunConfig& c, const std::string& v) { c.EXPR = split_ints(v, KEY); }                       \
  }

inline const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      SAFN_BIND_STR("corpus.manifest", manifest),
      SAFN_BIND_STR("out", out),
      SAFN_BIND_INT("seed", seed, std::uint64_t),
      Binding{"scenario", [](const RunConfig& c) { return to_string(c.scenario.kind); },
              [](RunConfig& c, const std::string& v) { c.scenario.kind = parse_scenario(v); }},
      Binding{"scenario.target_speaker", [](const RunConfig& c) { return c.scenario.target_speaker.value_or(""); },
              [](RunConfig& c, const std::string& v) {
                c.scenario.target_speaker = v.empty() ? std::nullopt : std::optional<std::string>(v);
              }},
      Binding{"variant", [](const RunConfig& c) { return c.variant.name(); },
              [](RunConfig& c, const std::string& v) { c.variant = parse_variant(v); }},

      SAFN_BIND_STR("synth.name", synth.name),
      SAFN_BIND_INT("synth.n_speakers", synth.n_speakers, int),
      SAFN_BIND_INT("synth.n_utterances", synth.n_utterances, int),
      SAFN_BIND_INT("synth.n_phones", synth.n_phones, int),
      SAFN_BIND_INT("synth.min_phones", synth.min_phones, int),
      SAFN_BIND_INT("synth.max_phones", synth.max_phones, int),
      SAFN_BIND_INT("synth.min_phone_frames", synth.min_phone_frames, int),
      SAFN_BIND_INT("synth.max_phone_frames", synth.max_phone_frames, int),
      SAFN_BIND_INT("synth.kernel_frames", synth.kernel_frames, int),
      SAFN_BIND_NUM("synth.ema_rate_hz", synth.ema_rate_hz, double),
      SAFN_BIND_NUM("synth.audio_rate_hz", synth.audio_rate_hz, double),
      SAFN_BIND_NUM("synth.speaker_shift_scale", synth.speaker_shift_scale, double),
      SAFN_BIND_NUM("synth.speaker_tilt_db_per_khz", synth.speaker_tilt_db_per_khz, double),
      SAFN_BIND_NUM("synth.speaker_gain_db", synth.speaker_gain_db, double),

      SAFN_BIND_NUM("frontend.mfcc.window_ms", model.frontend.mfcc.window_ms, double),
      SAFN_BIND_NUM("frontend.mfcc.hop_ms", model.frontend.mfcc.hop_ms, double),
      SAFN_BIND_INT("frontend.mfcc.num_ceps", model.frontend.mfcc.num_ceps, int),
      SAFN_BIND_INT("frontend.mfcc.num_mel_filters", model.frontend.mfcc.num_mel_filters, int),
      SAFN_BIND_NUM("frontend.mfcc.preemphasis", model.frontend.mfcc.preemphasis, double),
      SAFN_BIND_NUM("frontend.mfcc.low_hz", model.frontend.mfcc.low_hz, double),
      SAFN_BIND_NUM("frontend.mfcc.high_hz", model.frontend.mfcc.high_hz, double),
      SAFN_BIND_BOOL("frontend.deltas", model.frontend.deltas),
      SAFN_BIND_BOOL("frontend.lowpass", model.frontend.lowpass),
      SAFN_BIND_NUM("frontend.lowpass_cutoff_hz", model.frontend.lowpass_options.cutoff_hz, double),
      SAFN_BIND_INT("frontend.lowpass_order", model.frontend.lowpass_options.order, int),
      SAFN_BIND_INT("frontend.max_gap_frames", model.frontend.clean.max_gap_frames, int),
      SAFN_BIND_NUM("frontend.align_tolerance", model.frontend.align_tolerance, double),
      SAFN_BIND_STR("frontend.channel_map", model.frontend.channel_map),

      SAFN_BIND_LIST("sdn.speaker_channels", model.sdn.speaker_channels),
      SAFN_BIND_INT("sdn.speaker_dim", model.sdn.speaker_dim, int),
      SAFN_BIND_INT("sdn.content_dim", model.sdn.content_dim, int),
      SAFN_BIND_INT("sdn.content_blocks", model.sdn.content_blocks, int),
      SAFN_BIND_INT("sdn.decoder_channels", model.sdn.decoder_channels, int),
      SAFN_BIND_INT("sdn.decoder_blocks", model.sdn.decoder_blocks, int),
      SAFN_BIND_INT("sdn.kernel", model.sdn.kernel, int),
      SAFN_BIND_NUM("sdn.eps", model.sdn.eps, double),

      SAFN_BIND_NUM("sdn_train.learning_rate", model.sdn_train.learning_rate, double),
      SAFN_BIND_INT("sdn_train.batch_size", model.sdn_train.batch_size, int),
      SAFN_BIND_INT("sdn_train.iterations", model.sdn_train.iterations, std::int64_t),
      SAFN_BIND_INT("sdn_train.eval_every", model.sdn_train.eval_every, int),
      SAFN_BIND_INT("sdn_train.early_stop_patience", model.sdn_train.early_stop_patience, int),
      SAFN_BIND_NUM("sdn_train.gradient_clip_norm", model.sdn_train.gradient_clip_norm, double),

      SAFN_BIND_LIST("inv.kernels", model.inversion.kernels),
      SAFN_BIND_INT("inv.conv_channels", model.inversion.conv_channels, int),
      SAFN_BIND_INT("inv.afn_hidden", model.inversion.afn_hidden, int),
      SAFN_BIND_INT("inv.afn_layers", model.inversion.afn_layers, int),
      SAFN_BIND_INT("inv.afn_fc", model.inversion.afn_fc, int),
      SAFN_BIND_INT("inv.ain_hidden", model.inversion.ain_hidden, int),
      SAFN_BIND_INT("inv.ain_layers", model.inversion.ain_layers, int),
      SAFN_BIND_INT("inv.ain_fc", model.inversion.ain_fc, int),
      SAFN_BIND_INT("inv.proj_dim", model.inversion.proj_dim, int),
      SAFN_BIND_BOOL("inv.fuse_encoded_acoustics", model.inversion.fuse_encoded_acoustics),

      SAFN_BIND_NUM("train.learning_rate", model.train.learning_rate, double),
      SAFN_BIND_INT("train.batch_size", model.train.batch_size, int),
      SAFN_BIND_INT("train.iterations", model.train.iterations, std::int64_t),
      SAFN_BIND_NUM("train.alpha", model.train.alpha, double),
      SAFN_BIND_NUM("train.beta", model.train.beta, double),
      SAFN_BIND_NUM("train.adam_beta1", model.train.adam.beta1, double),
      SAFN_BIND_NUM("train.adam_beta2", model.train.adam.beta2, double),
      SAFN_BIND_NUM("train.adam_eps", model.train.adam.eps, double),
      SAFN_BIND_NUM("train.gradient_clip_norm", model.train.gradient_clip_norm, double),
      SAFN_BIND_INT("train.eval_every", model.train.eval_every, int),
      SAFN_BIND_INT("train.early_stop_patience", model.train.early_stop_patience, int),
      SAFN_BIND_BOOL("train.select_best", model.train.select_best),
      SAFN_BIND_NUM("train.fine_tune_iteration_scale", model.train.fine_tune_iteration_scale, double),
      SAFN_BIND_NUM("train.fine_tune_lr_scale", model.train.fine_tune_lr_scale, double),
      Binding{"train.pooling",
              [](const RunConfig& c) { return std::string(c.model.train.pooling == Pooling::frames ? "frames" : "utterances"); },
              [](RunConfig& c, const std::string& v) {
                if (v == "frames")
                  c.model.train.pooling = Pooling::frames;
                else if (v == "utterances")
                  c.model.train.pooling = Pooling::utterances;
                else
                  throw ConfigError("train.pooling: expected frames or utterances, got '" + v + "'");
              }},
  };
  return table;
}

#undef SAFN_BIND_NUM
#undef SAFN_BIND_INT
#undef SAFN_BIND_BOOL
#undef SAFN_BIND_STR
#undef SAFN_BIND_LIST

inline const Binding& find_binding(const std::string& key) {
  for (const auto& b : bindings())
    if (b.key == key) return b;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace config_detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& b : config_detail::bindings()) out.push_back(b.key);
  return out;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  config_detail::find_binding(key).set(c, value);
}

/// `key=value`, as given to --set.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set_config_value(c, config_detail::trim(assignment.substr(0, eq)), config_detail::trim(assignment.substr(eq + 1)));
}

/// Applies every assignment in `text` on top of `c`. `prefix` is prepended
/// to keys that lack it (used for stand-alone MFCC config files).
inline void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin,
                              const std::string& prefix = "") {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = config_detail::trim(line.substr(0, eq));
    if (!prefix.empty() && key.rfind(prefix, 0) != 0) key = prefix + key;
    try {
      set_config_value(c, key, config_detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void load_config_file(RunConfig& c, const std::filesystem::path& path, const std::string& prefix = "") {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  apply_config_text(c, read_file(path), path.string(), prefix);
}

inline FieldMap config_fields(const RunConfig& c) {
  FieldMap m;
  for (const auto& b : config_detail::bindings()) m[b.key] = b.get(c);
  return m;
}

inline std::string serialize_config(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_fields(c)) out += k + " = " + v + "\n";
  return out;
}

inline std::string config_hash(const RunConfig& c) { return hash_fields(config_fields(c)); }

inline void validate(const RunConfig& c) {
  c.synth.validate();
  c.model.sdn_config().validate();
  c.model.inversion_for(c.variant).validate();
  c.model.train.validate();
  c.model.sdn_train.validate();
  if (c.model.frontend.mfcc.num_ceps < 1) throw ConfigError("frontend.mfcc.num_ceps must be positive");
}

}  // namespace safn
