#pragma once

// Architecture configs as flat key/value maps, their hashes, and
// self-contained model checkpoints (SDN + inversion + normalization stats).

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "safn/core/hash.hpp"
#include "safn/inversion/inversion.hpp"
#include "safn/nn/checkpoint.hpp"
#include "safn/sdn/sdn.hpp"
#include "safn/training/dataset.hpp"

namespace safn {

using FieldMap = std::map<std::string, std::string>;

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<int> split_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  try {
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a comma-separated integer list, got '" + s + "'");
  }
  return out;
}

namespace detail {

inline const std::string& field(const FieldMap& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw ConfigError("missing config field " + key);
  return it->second;
}

inline int field_int(const FieldMap& m, const std::string& key) {
  try {
    return std::stoi(field(m, key));
  } catch (const std::invalid_argument&) {
    throw ConfigError(key + ": expected an integer");
  }
}

inline bool field_bool(const FieldMap& m, const std::string& key) { return field(m, key) == "true"; }

}  // namespace detail

inline FieldMap config_fields(const SdnConfig& c) {
  return {{"sdn.input_dim", std::to_string(c.input_dim)},
          {"sdn.speaker_channels", join_ints(c.speaker_channels)},
          {"sdn.speaker_dim", std::to_string(c.speaker_dim)},
          {"sdn.content_dim", std::to_string(c.content_dim)},
          {"sdn.content_blocks", std::to_string(c.content_blocks)},
          {"sdn.decoder_channels", std::to_string(c.decoder_channels)},
          {"sdn.decoder_blocks", std::to_string(c.decoder_blocks)},
          {"sdn.kernel", std::to_string(c.kernel)},
          {"sdn.eps", format_double(c.eps)},
          {"sdn.linear", c.linear ? "true" : "false"}};
}

inline SdnConfig sdn_config_from(const FieldMap& m) {
  using namespace detail;
  SdnConfig c;
  c.input_dim = field_int(m, "sdn.input_dim");
  c.speaker_channels = split_ints(field(m, "sdn.speaker_channels"), "sdn.speaker_channels");
  c.speaker_dim = field_int(m, "sdn.speaker_dim");
  c.content_dim = field_int(m, "sdn.content_dim");
  c.content_blocks = field_int(m, "sdn.content_blocks");
  c.decoder_channels = field_int(m, "sdn.decoder_channels");
  c.decoder_blocks = field_int(m, "sdn.decoder_blocks");
  c.kernel = field_int(m, "sdn.kernel");
  c.eps = std::stod(field(m, "sdn.eps"));
  c.linear = field_bool(m, "sdn.linear");
  c.validate();
  return c;
}

inline FieldMap config_fields(const InversionConfig& c) {
  return {{"inv.input_dim", std::to_string(c.input_dim)},
          {"inv.content_dim", std::to_string(c.content_dim)},
          {"inv.speaker_dim", std::to_string(c.speaker_dim)},
          {"inv.kernels", join_ints(c.kernels)},
          {"inv.conv_channels", std::to_string(c.conv_channels)},
          {"inv.afn_hidden", std::to_string(c.afn_hidden)},
          {"inv.afn_layers", std::to_string(c.afn_layers)},
          {"inv.afn_fc", std::to_string(c.afn_fc)},
          {"inv.ain_hidden", std::to_string(c.ain_hidden)},
          {"inv.ain_layers", std::to_string(c.ain_layers)},
          {"inv.ain_fc", std::to_string(c.ain_fc)},
          {"inv.proj_dim", std::to_string(c.proj_dim)},
          {"inv.fuse_encoded_acoustics", c.fuse_encoded_acoustics ? "true" : "false"},
          {"inv.linear", c.linear ? "true" : "false"},
          {"inv.variant", c.variant.name()}};
}

inline InversionConfig inversion_config_from(const FieldMap& m) {
  using namespace detail;
  InversionConfig c;
  c.input_dim = field_int(m, "inv.input_dim");
  c.content_dim = field_int(m, "inv.content_dim");
  c.speaker_dim = field_int(m, "inv.speaker_dim");
  c.kernels = split_ints(field(m, "inv.kernels"), "inv.kernels");
  c.conv_channels = field_int(m, "inv.conv_channels");
  c.afn_hidden = field_int(m, "inv.afn_hidden");
  c.afn_layers = field_int(m, "inv.afn_layers");
  c.afn_fc = field_int(m, "inv.afn_fc");
  c.ain_hidden = field_int(m, "inv.ain_hidden");
  c.ain_layers = field_int(m, "inv.ain_layers");
  c.ain_fc = field_int(m, "inv.ain_fc");
  c.proj_dim = field_int(m, "inv.proj_dim");
  c.fuse_encoded_acoustics = field_bool(m, "inv.fuse_encoded_acoustics");
  c.linear = field_bool(m, "inv.linear");
  c.variant = parse_variant(field(m, "inv.variant"));
  c.validate();
  return c;
}

/// Order-independent: the map is sorted by key before hashing.
inline std::string hash_fields(const FieldMap& m) {
  Fnv1a h;
  for (const auto& [k, v] : m) {
    h.update(k);
    h.update("=");
    h.update(v);
    h.update("\n");
  }
  return hex64(h.digest());
}

inline std::string sdn_config_hash(const SdnConfig& c) { return hash_fields(config_fields(c)); }

/// Hash of everything a trained inversion checkpoint depends on: the
/// inversion architecture and, when the variant uses it, the SDN's.
inline std::string model_config_hash(const InversionConfig& inv, const SdnConfig* sdn) {
  FieldMap m = config_fields(inv);
  if (inv.variant.use_sdn && sdn) m.merge(config_fields(*sdn));
  return hash_fields(m);
}

inline void put_fields(nn::Checkpoint& c, const FieldMap& m) {
  for (const auto& [k, v] : m) c.meta[k] = v;
}

inline nn::Checkpoint make_sdn_checkpoint(Sdn<float>& sdn, std::int64_t step, std::uint64_t seed) {
  nn::Checkpoint c;
  c.config_hash = sdn_config_hash(sdn.config());
  c.step = step;
  c.seed = seed;
  c.meta["kind"] = "sdn";
  put_fields(c, config_fields(sdn.config()));
  nn::add_params(c, sdn.params());
  return c;
}

inline Sdn<float> load_sdn(const nn::Checkpoint& c) {
  auto kind = c.meta.find("kind");
  if (kind == c.meta.end() || kind->second != "sdn") throw DataError("checkpoint does not hold an SDN");
  Sdn<float> sdn(sdn_config_from(c.meta));
  c.require_hash(sdn_config_hash(sdn.config()));
  nn::load_params(c, sdn.params());
  return sdn;
}

/// Inversion model plus what inference needs to run it standalone.
struct LoadedModel {
  InversionModel<float> model;
  std::optional<Sdn<float>> sdn;
  DatasetStats stats;
};

/// Everything except the inversion parameters: configs, hash, SDN weights
/// and normalization stats. Training-state checkpoints carry the inversion
/// parameters themselves.
inline void add_model_meta(nn::Checkpoint& c, const InversionConfig& icfg, Sdn<float>* sdn, const DatasetStats& stats) {
  c.config_hash = model_config_hash(icfg, sdn ? &sdn->config() : nullptr);
  c.meta["kind"] = "safn";
  put_fields(c, config_fields(icfg));
  if (icfg.variant.use_sdn) {
    if (!sdn) throw ConfigError("variant " + icfg.variant.name() + " checkpoint needs its SDN");
    put_fields(c, config_fields(sdn->config()));
    nn::add_params(c, sdn->params());
  }
  add_dataset_stats(c, stats);
}

inline nn::Checkpoint make_model_checkpoint(InversionModel<float>& model, Sdn<float>* sdn, const DatasetStats& stats,
                                            std::int64_t step = 0, std::uint64_t seed = 0) {
  nn::Checkpoint c;
  c.step = step;
  c.seed = seed;
  add_model_meta(c, model.config(), sdn, stats);
  nn::add_params(c, model.params());
  return c;
}

/// `prefix` selects which parameter set to restore ("" = latest,
/// "best." = best-validation, used when present).
inline LoadedModel load_model(const nn::Checkpoint& c, const std::string& prefix = "best.") {
  auto kind = c.meta.find("kind");
  if (kind == c.meta.end() || kind->second != "safn") throw DataError("checkpoint does not hold an inversion model");
  LoadedModel out{InversionModel<float>(inversion_config_from(c.meta)), std::nullopt, load_dataset_stats(c)};
  if (out.model.config().variant.use_sdn) {
    out.sdn.emplace(sdn_config_from(c.meta));
    nn::load_params(c, out.sdn->params());
  }
  c.require_hash(model_config_hash(out.model.config(), out.sdn ? &out.sdn->config() : nullptr));
  const std::string p = c.find(prefix + out.model.params().front().name) ? prefix : "";
  nn::load_params(c, out.model.params(), p);
  return out;
}

}  // namespace safn
