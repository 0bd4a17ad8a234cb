#pragma once

// Scenario orchestration: splits -> front end -> normalization ->
// (SDN pretraining) -> joint training -> (S3 fine-tuning) -> test metrics.

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "safn/training/train.hpp"

namespace safn {

struct ScenarioConfig {
  FrontendConfig frontend;
  SdnConfig sdn;
  SdnTrainConfig sdn_train;
  InversionConfig inversion;
  TrainConfig train;

  /// Inversion config with the acoustic/SDN widths filled in and the
  /// variant applied.
  InversionConfig inversion_for(const AblationVariant& v) const {
    InversionConfig c = inversion;
    c.input_dim = frontend.feature_dim();
    c.content_dim = sdn.content_dim;
    c.speaker_dim = sdn.speaker_dim;
    c.variant = v;
    return c;
  }

  SdnConfig sdn_config() const {
    SdnConfig c = sdn;
    c.input_dim = frontend.feature_dim();
    return c;
  }
};

struct ScenarioData {
  ScenarioSpec spec;
  SplitAssignment split;
  Dataset dataset;
};

/// Throws LeakageError if any training-side statistic saw the S4 target.
inline void check_stats_leakage(const ScenarioSpec& s, const DatasetStats& stats) {
  if (s.kind != Scenario::S4 || !s.target_speaker) return;
  if (stats.ema.lip.count(*s.target_speaker) || stats.ema.tongue.count(*s.target_speaker))
    throw LeakageError("normalization statistics were fitted on target speaker " + *s.target_speaker);
}

/// Splits, leakage guards and normalization. `prepared` may hold more
/// utterances than the manifest's split uses.
inline ScenarioData prepare_scenario(const CorpusManifest& m, const ScenarioSpec& s,
                                     const std::vector<PreparedUtterance>& prepared) {
  ScenarioData d{s, make_splits(m, s), {}};
  check_no_leakage(m, s, d.split);
  d.dataset = build_dataset(prepared, d.split);
  check_stats_leakage(s, d.dataset.stats);
  if (d.dataset.test.empty()) throw DataError("scenario " + to_string(s.kind) + ": test split is empty");
  return d;
}

inline ScenarioData prepare_scenario(const CorpusManifest& m, const ScenarioSpec& s, const FrontendConfig& f) {
  return prepare_scenario(m, s, prepare_corpus(m, f));
}

/// SDN training data: acoustics of every training-side utterance (train
/// plus, in S3, the target's fine-tune split); validation for early stop.
inline SdnTrainResult pretrain_sdn_for(const ScenarioData& d, const ScenarioConfig& cfg,
                                       const std::function<void(const SdnMetricsRow&)>& on_eval = {}) {
  auto train = acoustic_view(d.dataset.train);
  for (auto& a : acoustic_view(d.dataset.fine_tune)) train.push_back(std::move(a));
  if (d.spec.kind == Scenario::S4 && d.spec.target_speaker)
    for (const auto& a : train)
      if (a.speaker_id == *d.spec.target_speaker) throw LeakageError("SDN training data contains the S4 target");
  SdnTrainConfig tc = cfg.sdn_train;
  tc.seed = mix_seed(d.spec.seed, 101);
  return pretrain_sdn(train, acoustic_view(d.dataset.validation), cfg.sdn_config(), tc, on_eval);
}

struct ScenarioResult {
  MetricsReport report;
  std::optional<MetricsReport> generic_report;  // S3: before fine-tuning
  TrainResult train;
  std::optional<TrainResult> fine;
};

struct ScenarioHooks {
  std::function<void(const TrainMetricsRow&)> on_eval;
  std::function<void(const SdnMetricsRow&)> on_sdn_eval;
};

inline MetricsReport label(MetricsReport r, const ScenarioSpec& s, const AblationVariant& v) {
  r.scenario = to_string(s.kind);
  r.variant = v.name();
  r.dataset = s.dataset;
  r.seed = s.seed;
  return r;
}

/// Trains and tests one variant. `sdn` is required iff the variant uses it;
/// `d` is taken by value since personalized features are attached to it.
inline ScenarioResult run_variant(ScenarioData d, const AblationVariant& v, const ScenarioConfig& cfg,
                                  const Sdn<float>* sdn, const ScenarioHooks& hooks = {}) {
  if (v.use_sdn) {
    if (!sdn) throw ConfigError("variant " + v.name() + " needs a pretrained SDN");
    attach_personalized(d.dataset, *sdn);
  }
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(d.spec.seed, 201);
  TrainOptions opts;
  opts.on_eval = hooks.on_eval;
  const InversionConfig icfg = cfg.inversion_for(v);
  ScenarioResult r{{}, std::nullopt, train_safn(d.dataset.train, d.dataset.validation, d.dataset.stats, icfg, tc, opts),
                   std::nullopt};
  const InversionModel<float>* final_model = &r.train.model;
  if (d.spec.kind == Scenario::S3) {
    r.generic_report =
        label(evaluate(r.train.model, d.dataset.test, d.dataset.stats, tc.alpha, tc.beta, tc.pooling).metrics, d.spec, v);
    r.fine = fine_tune(r.train.model, d.dataset.fine_tune, d.dataset.stats, tc);
    final_model = &r.fine->model;
  }
  r.report = label(evaluate(*final_model, d.dataset.test, d.dataset.stats, tc.alpha, tc.beta, tc.pooling).metrics, d.spec, v);
  return r;
}

inline ScenarioResult run_scenario(const CorpusManifest& m, const ScenarioSpec& s, const AblationVariant& v,
                                   const ScenarioConfig& cfg, const ScenarioHooks& hooks = {}) {
  ScenarioData d = prepare_scenario(m, s, cfg.frontend);
  std::optional<SdnTrainResult> sdn;
  if (v.use_sdn) sdn = pretrain_sdn_for(d, cfg, hooks.on_sdn_eval);
  return run_variant(std::move(d), v, cfg, sdn ? &sdn->model : nullptr, hooks);
}

}  // namespace safn
