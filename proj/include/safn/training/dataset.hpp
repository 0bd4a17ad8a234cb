#pragma once

// Corpus -> model-space examples.
//
// Per utterance: channel map, gap cleaning, low-pass, MFCC + deltas, frame
// alignment, lip/tongue selection. Per split: acoustic z-score fitted on the
// train split, EMA z-score fitted per speaker on that speaker's
// training-side utterances (pooled train stats for speakers without any).

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safn/corpus/ema.hpp"
#include "safn/corpus/manifest.hpp"
#include "safn/corpus/splits.hpp"
#include "safn/frontend/align.hpp"
#include "safn/frontend/deltas.hpp"
#include "safn/frontend/lowpass.hpp"
#include "safn/frontend/mfcc.hpp"
#include "safn/frontend/zscore.hpp"
#include "safn/inversion/inversion.hpp"
#include "safn/nn/checkpoint.hpp"
#include "safn/sdn/sdn.hpp"

namespace safn {

struct FrontendConfig {
  MfccConfig mfcc;
  bool deltas = true;
  bool lowpass = true;
  LowpassOptions lowpass_options;
  CleanOptions clean;
  double align_tolerance = 0.10;
  std::string channel_map;  // "", "mocha" or "mngu0"

  int feature_dim() const { return deltas ? 3 * mfcc.num_ceps : mfcc.num_ceps; }
};

/// One utterance after the front end, before normalization. EMA in mm.
struct PreparedUtterance {
  std::string id;
  std::string speaker_id;
  MatF features;
  MatF lip;
  MatF tongue;
};

inline AcousticFeatures acoustic_features(const Audio& audio, const FrontendConfig& cfg) {
  AcousticFeatures f = compute_mfcc(audio, cfg.mfcc);
  return cfg.deltas ? append_deltas(f) : f;
}

/// Returns nullopt when the EMA has an unrecoverable gap.
inline std::optional<PreparedUtterance> prepare_utterance(const Utterance& u, const FrontendConfig& cfg) {
  EmaTrajectory ema = u.ema;
  if (!cfg.channel_map.empty()) apply_channel_map(ema, builtin_channel_map(cfg.channel_map));
  auto cleaned = clean_trajectory(std::move(ema), cfg.clean, u.id);
  if (!cleaned) return std::nullopt;
  if (cfg.lowpass && cfg.lowpass_options.cutoff_hz < 0.5 * cleaned->rate_hz)
    *cleaned = lowpass_ema(*cleaned, cfg.lowpass_options);
  const AlignedStreams a = align_frames(acoustic_features(u.audio, cfg), *cleaned, cfg.align_tolerance);
  ChannelBlocks b = select_channels(a.ema);
  return PreparedUtterance{u.id, u.speaker_id, a.features.data, std::move(b.lip), std::move(b.tongue)};
}

/// Runs the front end over `ids` (all utterances when empty), in manifest
/// order. Dropped utterances are logged.
inline std::vector<PreparedUtterance> prepare_corpus(const CorpusManifest& m, const FrontendConfig& cfg,
                                                     const std::set<std::string>& ids = {}) {
  std::vector<PreparedUtterance> out;
  for (const auto& ref : m.utterances) {
    if (!ids.empty() && !ids.count(ref.id)) continue;
    auto p = prepare_utterance(load_utterance(m, ref), cfg);
    if (p)
      out.push_back(std::move(*p));
    else
      log_warn("dropped utterance " + ref.id + ": EMA gap too long");
  }
  if (out.empty()) throw DataError("corpus " + m.name + ": no usable utterances");
  return out;
}

/// Acoustic-only view; the only input type SDN pretraining accepts.
struct AcousticUtterance {
  std::string id;
  std::string speaker_id;
  MatF features;
};

/// Model-space example: z-scored features and targets, plus the frozen
/// SDN's personalized features when attached.
struct Example {
  std::string id;
  std::string speaker_id;
  MatF features;
  MatF lip;
  MatF tongue;
  MatF personalized;

  Eigen::Index frames() const { return features.rows(); }
};

struct EmaNormalization {
  NormalizationStats pooled_lip, pooled_tongue;
  std::map<std::string, NormalizationStats> lip, tongue;

  const NormalizationStats& lip_for(const std::string& speaker) const {
    auto it = lip.find(speaker);
    return it == lip.end() ? pooled_lip : it->second;
  }
  const NormalizationStats& tongue_for(const std::string& speaker) const {
    auto it = tongue.find(speaker);
    return it == tongue.end() ? pooled_tongue : it->second;
  }
};

struct DatasetStats {
  NormalizationStats features;
  EmaNormalization ema;
};

struct Dataset {
  std::vector<Example> train, validation, fine_tune, test;
  DatasetStats stats;
};

namespace detail {

inline std::vector<const MatF*> collect(const std::vector<const PreparedUtterance*>& us, MatF PreparedUtterance::*field) {
  std::vector<const MatF*> out;
  for (const auto* u : us) out.push_back(&(u->*field));
  return out;
}

}  // namespace detail

inline DatasetStats fit_dataset_stats(const std::vector<PreparedUtterance>& prepared, const SplitAssignment& split) {
  std::map<std::string, const PreparedUtterance*> by_id;
  for (const auto& p : prepared) by_id[p.id] = &p;
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<const PreparedUtterance*> out;
    for (const auto& id : ids)
      if (auto it = by_id.find(id); it != by_id.end()) out.push_back(it->second);
    return out;
  };
  const auto train = gather(split.train);
  if (train.empty()) throw DataError("train split is empty");
  const auto fine = gather(split.fine_tune);

  DatasetStats s;
  s.features = zscore_fit(detail::collect(train, &PreparedUtterance::features), SplitTag::train);
  s.ema.pooled_lip = zscore_fit(detail::collect(train, &PreparedUtterance::lip), SplitTag::train);
  s.ema.pooled_tongue = zscore_fit(detail::collect(train, &PreparedUtterance::tongue), SplitTag::train);

  auto fit_speakers = [&](const std::vector<const PreparedUtterance*>& us, SplitTag tag) {
    std::map<std::string, std::vector<const PreparedUtterance*>> per;
    for (const auto* u : us) per[u->speaker_id].push_back(u);
    for (const auto& [spk, list] : per) {
      if (s.ema.lip.count(spk)) continue;
      s.ema.lip[spk] = zscore_fit(detail::collect(list, &PreparedUtterance::lip), tag, NormScope::per_speaker);
      s.ema.tongue[spk] = zscore_fit(detail::collect(list, &PreparedUtterance::tongue), tag, NormScope::per_speaker);
    }
  };
  fit_speakers(train, SplitTag::train);
  fit_speakers(fine, SplitTag::fine_tune);
  return s;
}

inline Example make_example(const PreparedUtterance& p, const DatasetStats& s) {
  return Example{p.id,
                 p.speaker_id,
                 zscore_apply(p.features, s.features),
                 zscore_apply(p.lip, s.ema.lip_for(p.speaker_id)),
                 zscore_apply(p.tongue, s.ema.tongue_for(p.speaker_id)),
                 {}};
}

/// Splits and normalizes. Utterances named by the split but absent from
/// `prepared` (dropped by the front end) are skipped.
inline Dataset build_dataset(const std::vector<PreparedUtterance>& prepared, const SplitAssignment& split) {
  Dataset d;
  d.stats = fit_dataset_stats(prepared, split);
  std::map<std::string, const PreparedUtterance*> by_id;
  for (const auto& p : prepared) by_id[p.id] = &p;
  auto fill = [&](const std::vector<std::string>& ids, std::vector<Example>& dst) {
    for (const auto& id : ids)
      if (auto it = by_id.find(id); it != by_id.end()) dst.push_back(make_example(*it->second, d.stats));
  };
  fill(split.train, d.train);
  fill(split.validation, d.validation);
  fill(split.fine_tune, d.fine_tune);
  fill(split.test, d.test);
  return d;
}

inline std::vector<AcousticUtterance> acoustic_view(const std::vector<Example>& xs) {
  std::vector<AcousticUtterance> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back({x.id, x.speaker_id, x.features});
  return out;
}

inline void attach_personalized(std::vector<Example>& xs, const Sdn<float>& sdn) {
  for (auto& x : xs) x.personalized = personalized_features(sdn.encode_content(x.features), sdn.encode_speaker(x.features));
}

inline void attach_personalized(Dataset& d, const Sdn<float>& sdn) {
  for (auto* split : {&d.train, &d.validation, &d.fine_tune, &d.test}) attach_personalized(*split, sdn);
}

// Normalization statistics travel inside checkpoints so inference can map
// raw features in and predictions back to mm.

inline void add_stats(nn::Checkpoint& c, const NormalizationStats& s, const std::string& name) {
  c.add(name + ".mean", s.mean.cast<float>());
  c.add(name + ".std", s.std.cast<float>());
}

inline NormalizationStats load_stats(const nn::Checkpoint& c, const std::string& name) {
  const nn::Leaf* m = c.find(name + ".mean");
  const nn::Leaf* s = c.find(name + ".std");
  if (!m || !s) throw DataError("checkpoint lacks normalization statistics " + name);
  return {m->value.cast<double>(), s->value.cast<double>(), NormScope::global};
}

inline void add_dataset_stats(nn::Checkpoint& c, const DatasetStats& s) {
  add_stats(c, s.features, "norm.features");
  add_stats(c, s.ema.pooled_lip, "norm.lip");
  add_stats(c, s.ema.pooled_tongue, "norm.tongue");
  std::string speakers;
  for (const auto& [spk, st] : s.ema.lip) {
    add_stats(c, st, "norm.lip@" + spk);
    add_stats(c, s.ema.tongue.at(spk), "norm.tongue@" + spk);
    speakers += (speakers.empty() ? "" : ",") + spk;
  }
  if (!speakers.empty()) c.meta["norm_speakers"] = speakers;
}

inline DatasetStats load_dataset_stats(const nn::Checkpoint& c) {
  DatasetStats s;
  s.features = load_stats(c, "norm.features");
  s.ema.pooled_lip = load_stats(c, "norm.lip");
  s.ema.pooled_tongue = load_stats(c, "norm.tongue");
  auto it = c.meta.find("norm_speakers");
  if (it != c.meta.end() && !it->second.empty()) {
    std::stringstream ss(it->second);
    std::string spk;
    while (std::getline(ss, spk, ',')) {
      s.ema.lip[spk] = load_stats(c, "norm.lip@" + spk);
      s.ema.tongue[spk] = load_stats(c, "norm.tongue@" + spk);
    }
  }
  return s;
}

}  // namespace safn
