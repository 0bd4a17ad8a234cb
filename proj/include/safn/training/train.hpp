#pragma once

// Optimization loops: SDN pretraining (acoustics only) and joint
// AFN/FTN/AIN training with the SDN frozen.
//
// Batches are a pure function of (seed, step): step s takes positions
// [s*B, (s+1)*B) of an endless sequence of per-epoch seeded permutations.
// That, plus optimizer state in checkpoints, makes resume exact.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "safn/eval/metrics.hpp"
#include "safn/nn/adam.hpp"
#include "safn/training/model_io.hpp"

namespace safn {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 5;
  std::int64_t iterations = 28800;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  double beta = 0.5;
  double gradient_clip_norm = 5.0;
  int eval_every = 500;
  int early_stop_patience = 0;  // evaluations without improvement; 0 disables
  bool select_best = true;
  double fine_tune_iteration_scale = 0.2;
  double fine_tune_lr_scale = 0.5;
  Pooling pooling = Pooling::frames;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (iterations < 0) throw ConfigError("train: iterations must be non-negative");
    if (eval_every < 1) throw ConfigError("train: eval_every must be positive");
    if (alpha < 0 || beta < 0 || !(alpha + beta > 0)) throw ConfigError("train: need alpha, beta >= 0 and alpha + beta > 0");
    if (gradient_clip_norm < 0) throw ConfigError("train: gradient_clip_norm must be non-negative");
    if (fine_tune_iteration_scale < 0 || !(fine_tune_lr_scale > 0)) throw ConfigError("train: bad fine-tune scales");
  }
};

struct SdnTrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 25;
  std::int64_t iterations = 20000;
  int eval_every = 500;
  int early_stop_patience = 10;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("sdn_train: learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("sdn_train: batch_size must be positive");
    if (iterations < 0) throw ConfigError("sdn_train: iterations must be non-negative");
    if (eval_every < 1) throw ConfigError("sdn_train: eval_every must be positive");
  }
};

class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, int batch_size, std::uint64_t seed) : n_(n), batch_(batch_size), seed_(seed) {
    if (n == 0) throw DataError("batch schedule over an empty split");
  }

  std::vector<std::size_t> batch(std::int64_t step) {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(batch_));
    for (int j = 0; j < batch_; ++j) {
      const auto p = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(batch_) + static_cast<std::uint64_t>(j);
      out.push_back(epoch(static_cast<std::int64_t>(p / n_))[p % n_]);
    }
    return out;
  }

 private:
  const std::vector<std::size_t>& epoch(std::int64_t e) {
    if (e != cached_) {
      perm_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
      seeded_shuffle(perm_, mix_seed(seed_, static_cast<std::uint64_t>(e)));
      cached_ = e;
    }
    return perm_;
  }

  std::size_t n_;
  int batch_;
  std::uint64_t seed_;
  std::int64_t cached_ = -1;
  std::vector<std::size_t> perm_;
};

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------- SDN

struct SdnMetricsRow {
  std::int64_t step = 0;
  double train_loss = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0;

  std::string line() const {
    return "step=" + std::to_string(step) + " train_l1=" + format_metric(train_loss) + " val_l1=" + format_metric(val_loss) +
           " wall_s=" + format_metric(wall_s);
  }
};

struct SdnTrainResult {
  Sdn<float> model;
  std::vector<SdnMetricsRow> history;
  double initial_loss = 0;
  double final_loss = 0;
  std::int64_t steps = 0;
  bool early_stopped = false;
};

class SdnDivergence : public NumericError {
 public:
  SdnDivergence(const std::string& msg, nn::Checkpoint last_good) : NumericError(msg), last_good(std::move(last_good)) {}
  nn::Checkpoint last_good;
};

/// Element-weighted mean L1 reconstruction error over utterances.
inline double sdn_mean_loss(const Sdn<float>& sdn, const std::vector<AcousticUtterance>& xs) {
  double sum = 0, n = 0;
  for (const auto& x : xs) {
    const auto numel = static_cast<double>(x.features.size());
    sum += sdn_loss(x.features, sdn.reconstruct(x.features)) * numel;
    n += numel;
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

inline void check_min_frames(const std::vector<AcousticUtterance>& xs, int min_frames) {
  for (const auto& x : xs)
    if (x.features.rows() < min_frames)
      throw DataError("utterance " + x.id + " has " + std::to_string(x.features.rows()) + " frames; the SDN needs " +
                      std::to_string(min_frames));
}

/// Self-supervised reconstruction training. Monitors the validation L1
/// (train L1 when there is no validation data) and returns the best model.
inline SdnTrainResult pretrain_sdn(const std::vector<AcousticUtterance>& train,
                                   const std::vector<AcousticUtterance>& validation, const SdnConfig& cfg,
                                   const SdnTrainConfig& tcfg,
                                   const std::function<void(const SdnMetricsRow&)>& on_eval = {}) {
  tcfg.validate();
  if (train.empty()) throw DataError("pretrain_sdn: no training utterances");
  check_min_frames(train, cfg.min_frames());
  check_min_frames(validation, cfg.min_frames());
  const auto& monitor = validation.empty() ? train : validation;

  SdnTrainResult r{Sdn<float>(cfg), {}, 0, 0, 0, false};
  Sdn<float>& model = r.model;
  Rng rng(mix_seed(tcfg.seed, 11));
  model.init(rng);
  auto params = model.params();
  nn::Adam<float> adam;
  BatchSchedule sched(train.size(), tcfg.batch_size, mix_seed(tcfg.seed, 12));

  r.initial_loss = sdn_mean_loss(model, monitor);
  Sdn<float> best = model;
  double best_loss = r.initial_loss;
  int since_best = 0;
  nn::Checkpoint last_good = make_sdn_checkpoint(model, 0, tcfg.seed);
  double running = 0;
  std::int64_t running_n = 0;
  Stopwatch clock;

  for (std::int64_t step = 0; step < tcfg.iterations; ++step) {
    const auto idx = sched.batch(step);
    double numel = 0;
    for (auto i : idx) numel += static_cast<double>(train[i].features.size());
    nn::zero_grads(params);
    double loss = 0;
    for (auto i : idx) {
      const auto w = static_cast<double>(train[i].features.size()) / numel;
      loss += w * model.loss_and_backward(train[i].features, static_cast<float>(w));
    }
    if (!std::isfinite(loss) || !std::isfinite(nn::grad_norm(params)))
      throw SdnDivergence("sdn pretraining diverged at step " + std::to_string(step + 1) +
                              "; last good checkpoint is from step " + std::to_string(last_good.step),
                          last_good);
    nn::clip_grad_norm(params, tcfg.gradient_clip_norm);
    adam.step(params, tcfg.learning_rate);
    running += loss;
    ++running_n;
    r.steps = step + 1;

    if ((step + 1) % tcfg.eval_every == 0 || step + 1 == tcfg.iterations) {
      SdnMetricsRow row{step + 1, running / static_cast<double>(running_n), sdn_mean_loss(model, monitor), clock.seconds()};
      running = 0;
      running_n = 0;
      if (!std::isfinite(row.val_loss))
        throw SdnDivergence("sdn monitor loss is not finite at step " + std::to_string(step + 1), last_good);
      last_good = make_sdn_checkpoint(model, step + 1, tcfg.seed);
      r.history.push_back(row);
      if (on_eval) on_eval(row);
      if (row.val_loss < best_loss) {
        best_loss = row.val_loss;
        best = model;
        since_best = 0;
      } else if (tcfg.early_stop_patience > 0 && ++since_best >= tcfg.early_stop_patience) {
        r.early_stopped = true;
        break;
      }
    }
  }
  r.model = std::move(best);
  r.final_loss = best_loss;
  return r;
}

// ---------------------------------------------------------------- SAFN

struct TrainMetricsRow {
  std::int64_t step = 0;
  double train_loss = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_rmse = std::numeric_limits<double>::quiet_NaN();
  double val_cc = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0;

  std::string line() const {
    return "step=" + std::to_string(step) + " train_loss=" + format_metric(train_loss) +
           " val_loss=" + format_metric(val_loss) + " val_rmse=" + format_metric(val_rmse) +
           " val_cc=" + format_metric(val_cc) + " wall_s=" + format_metric(wall_s);
  }
};

inline InversionOutput<float> predict(const InversionModel<float>& m, const Example& x) {
  const bool sdn = m.config().variant.use_sdn;
  if (sdn && x.personalized.rows() != x.frames())
    throw ConfigError("example " + x.id + " lacks personalized features for variant " + m.config().variant.name());
  return m.forward(x.features, sdn ? &x.personalized : nullptr);
}

/// Per-frame combined loss of one output; the lip term is dropped when the
/// variant has no AFN.
inline double example_loss(const InversionOutput<float>& out, const Example& x, double alpha, double beta) {
  if (out.lip.size() == 0) return beta * (x.tongue - out.tongue).cast<double>().squaredNorm();
  return safn_loss(x.lip, out.lip, x.tongue, out.tongue, alpha, beta);
}

struct EvalResult {
  double loss = 0;  // per frame
  MetricsReport metrics;
};

/// Loss in model space, RMSE/CC in mm (predictions and truth un-normalized
/// with the speaker's EMA stats).
inline EvalResult evaluate(const InversionModel<float>& m, const std::vector<Example>& xs, const DatasetStats& stats,
                           double alpha = 0.5, double beta = 0.5, Pooling pooling = Pooling::frames) {
  if (xs.empty()) throw DataError("evaluate: empty split");
  EvalResult r;
  MetricsAccumulator acc(pooling);
  double frames = 0;
  for (const auto& x : xs) {
    const auto out = predict(m, x);
    r.loss += example_loss(out, x, alpha, beta);
    frames += static_cast<double>(x.frames());
    const auto& ts = stats.ema.tongue_for(x.speaker_id);
    acc.add(zscore_unapply(out.tongue, ts), zscore_unapply(x.tongue, ts));
  }
  r.loss /= frames;
  r.metrics = acc.finalize();
  return r;
}

struct TrainOptions {
  const nn::Checkpoint* resume = nullptr;
  const InversionModel<float>* init = nullptr;  // start from these weights instead of a fresh init
  std::function<void(const TrainMetricsRow&)> on_eval;
  std::function<void(const nn::Checkpoint&)> on_checkpoint;  // called after every evaluation
};

struct TrainResult {
  InversionModel<float> model;  // best-validation (or final) parameters
  InversionModel<float> last;   // parameters after the last step
  std::vector<TrainMetricsRow> history;
  std::int64_t steps = 0;
  std::int64_t best_step = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
  nn::Checkpoint checkpoint;  // training state only; model packaging is the caller's
};

namespace detail {

inline nn::Checkpoint training_state(InversionModel<float>& model, InversionModel<float>& best, const nn::Adam<float>& adam,
                                     std::int64_t step, std::uint64_t seed, double best_val, std::int64_t best_step,
                                     int since_best, bool keep_best) {
  nn::Checkpoint c;
  c.step = step;
  c.seed = seed;
  c.meta["best_val_loss"] = format_double(best_val);
  c.meta["best_step"] = std::to_string(best_step);
  c.meta["evals_since_best"] = std::to_string(since_best);
  nn::add_params(c, model.params());
  if (keep_best && best_step > 0) nn::add_params(c, best.params(), "best.");
  nn::add_adam_state(c, adam);
  return c;
}

inline void check_examples(const std::vector<Example>& xs, const InversionModel<float>& m, const char* split) {
  const int min_frames = m.config().max_kernel();
  for (const auto& x : xs) {
    if (x.frames() < min_frames)
      throw DataError(std::string(split) + " utterance " + x.id + " is shorter than the largest encoder kernel");
    if (m.config().variant.use_sdn && x.personalized.rows() != x.frames())
      throw ConfigError(std::string(split) + " utterance " + x.id + " lacks personalized features");
  }
}

}  // namespace detail

/// Minimizes the combined loss on `train`; evaluates on `validation` every
/// eval_every steps and keeps the best-validation parameters.
inline TrainResult train_safn(const std::vector<Example>& train, const std::vector<Example>& validation,
                              const DatasetStats& stats, const InversionConfig& icfg, const TrainConfig& cfg,
                              const TrainOptions& opts = {}) {
  cfg.validate();
  if (train.empty()) throw DataError("train_safn: train split is empty");
  TrainResult r{InversionModel<float>(icfg), InversionModel<float>(icfg), {}, 0, 0,
                std::numeric_limits<double>::infinity(), false, {}};
  InversionModel<float>& model = r.last;
  detail::check_examples(train, model, "train");
  detail::check_examples(validation, model, "validation");
  if (opts.init) {
    if (model_config_hash(opts.init->config(), nullptr) != model_config_hash(icfg, nullptr))
      throw nn::ConfigHashMismatch("initial weights were built for a different inversion config");
    model = *opts.init;
  } else {
    Rng rng(mix_seed(cfg.seed, 21));
    model.init(rng);
  }
  auto params = model.params();
  nn::Adam<float> adam(cfg.adam);
  InversionModel<float> best = model;
  int since_best = 0;
  std::int64_t start = 0;
  if (opts.resume) {
    const nn::Checkpoint& c = *opts.resume;
    nn::load_params(c, params);
    nn::load_adam_state(c, adam, params);
    if (c.find("best." + params.front().name)) nn::load_params(c, best.params(), "best.");
    start = c.step;
    r.best_val_loss = std::stod(c.meta.at("best_val_loss"));
    r.best_step = std::stoll(c.meta.at("best_step"));
    since_best = std::stoi(c.meta.at("evals_since_best"));
  }

  const bool use_sdn = icfg.variant.use_sdn;
  BatchSchedule sched(train.size(), cfg.batch_size, mix_seed(cfg.seed, 22));
  double running = 0;
  std::int64_t running_n = 0;
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  Stopwatch clock;
  r.steps = start;

  for (std::int64_t step = start; step < cfg.iterations; ++step) {
    const auto idx = sched.batch(step);
    double frames = 0;
    for (auto i : idx) frames += static_cast<double>(train[i].frames());
    const auto scale = static_cast<float>(1.0 / frames);
    nn::zero_grads(params);
    double loss = 0;
    for (auto i : idx) {
      const Example& x = train[i];
      loss += model.loss_and_backward(x.features, use_sdn ? &x.personalized : nullptr, x.lip, x.tongue, cfg.alpha,
                                      cfg.beta, scale);
    }
    loss /= frames;
    const double gnorm = nn::grad_norm(params);
    if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
      std::string ids;
      for (auto i : idx) ids += " " + train[i].id;
      throw NumericError("training loss is not finite at step " + std::to_string(step + 1) + " (loss " +
                         format_metric(loss) + ", grad norm " + format_metric(gnorm) + ", last finite loss " +
                         format_metric(last_finite) + ", batch:" + ids + ")");
    }
    last_finite = loss;
    nn::clip_grad_norm(params, cfg.gradient_clip_norm);
    adam.step(params, cfg.learning_rate);
    running += loss;
    ++running_n;
    r.steps = step + 1;

    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.iterations) {
      TrainMetricsRow row;
      row.step = step + 1;
      row.train_loss = running / static_cast<double>(running_n);
      running = 0;
      running_n = 0;
      bool stop = false;
      if (!validation.empty()) {
        const EvalResult ev = evaluate(model, validation, stats, cfg.alpha, cfg.beta, cfg.pooling);
        row.val_loss = ev.loss;
        row.val_rmse = ev.metrics.mean_rmse;
        row.val_cc = ev.metrics.mean_cc;
        if (ev.loss < r.best_val_loss) {
          r.best_val_loss = ev.loss;
          r.best_step = step + 1;
          best = model;
          since_best = 0;
        } else {
          ++since_best;
          stop = cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience;
        }
      }
      row.wall_s = clock.seconds();
      r.history.push_back(row);
      if (opts.on_eval) opts.on_eval(row);
      if (opts.on_checkpoint)
        opts.on_checkpoint(
            detail::training_state(model, best, adam, step + 1, cfg.seed, r.best_val_loss, r.best_step, since_best,
                                    cfg.select_best));
      if (stop) {
        r.early_stopped = true;
        break;
      }
    }
  }
  r.model = (cfg.select_best && r.best_step > 0) ? best : model;
  r.checkpoint = detail::training_state(model, best, adam, r.steps, cfg.seed, r.best_val_loss, r.best_step, since_best,
                                        cfg.select_best);
  return r;
}

inline TrainConfig fine_tune_schedule(const TrainConfig& base) {
  TrainConfig c = base;
  c.iterations = std::llround(base.fine_tune_iteration_scale * static_cast<double>(base.iterations));
  c.learning_rate = base.learning_rate * base.fine_tune_lr_scale;
  c.select_best = false;
  c.early_stop_patience = 0;
  c.seed = mix_seed(base.seed, 31);
  return c;
}

/// Continues training a generic model on the target speaker's fine-tune
/// split only, with the reduced schedule; returns the final parameters.
inline TrainResult fine_tune(const InversionModel<float>& generic, const std::vector<Example>& fine_split,
                             const DatasetStats& stats, const TrainConfig& base, TrainOptions opts = {}) {
  if (fine_split.empty()) throw DataError("fine_tune: fine-tune split is empty");
  opts.init = &generic;
  opts.resume = nullptr;
  return train_safn(fine_split, {}, stats, generic.config(), fine_tune_schedule(base), opts);
}

}  // namespace safn
