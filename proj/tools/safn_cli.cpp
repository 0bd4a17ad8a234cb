// safn: command-line entry point.
//
//   safn synth        --out DIR
//   safn convert      INPUT_DIR --corpus-name NAME --out DIR
//   safn pretrain-sdn --manifest M
//   safn train        --manifest M [--sdn CKPT] [--resume CKPT]
//   safn finetune     --checkpoint CKPT --scenario S3 --target-speaker ID
//   safn eval         --checkpoint CKPT | --variant all [--scenario all]
//   safn infer        --checkpoint CKPT --input FILE
//   safn plot         --checkpoint CKPT | --report CSV
//   safn gradcheck
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safn/cli/run_config.hpp"
#include "safn/cli/run_dir.hpp"
#include "safn/corpus/convert.hpp"
#include "safn/safn.hpp"

namespace fs = std::filesystem;
using namespace safn;

namespace {

struct CommonFlags {
  std::string config;
  std::string mfcc_config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string manifest;
  std::string scenario;
  std::string variant;
  std::string target_speaker;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key = value config file");
  app->add_option("--mfcc-config", f.mfcc_config, "key = value MFCC config file (keys under frontend.mfcc.)");
  app->add_option("--seed", f.seed, "run seed");
  app->add_option("--out", f.out, "output root (run directories are created under it)");
  app->add_option("--manifest", f.manifest, "corpus manifest (manifest.txt)");
  app->add_option("--scenario", f.scenario, "S1|S2|S3|S4");
  app->add_option("--variant", f.variant, "SOTA|SAFN-S|SAFN-A|SAFN-S-A|SAFN");
  app->add_option("--target-speaker", f.target_speaker, "target speaker for S1 (multi-speaker corpora), S3 and S4");
  app->add_option("--set", f.sets, "override, key=value (repeatable)");
  app->add_flag("--quiet", f.quiet, "only warnings and results");
}

/// defaults < `base` fields < config file < MFCC file < flags < --set
RunConfig build_config(const CommonFlags& f, const FieldMap* base = nullptr) {
  RunConfig c;
  if (base)
    for (const auto& [k, v] : *base)
      if (k.rfind("run.", 0) == 0) set_config_value(c, k.substr(4), v);
  if (!f.config.empty()) load_config_file(c, f.config);
  if (!f.mfcc_config.empty()) load_config_file(c, f.mfcc_config, "frontend.mfcc.");
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (!f.manifest.empty()) c.manifest = f.manifest;
  if (!f.scenario.empty() && f.scenario != "all") c.scenario.kind = parse_scenario(f.scenario);
  if (!f.variant.empty() && f.variant != "all") c.variant = parse_variant(f.variant);
  if (!f.target_speaker.empty()) c.scenario.target_speaker = f.target_speaker;
  for (const auto& s : f.sets) apply_override(c, s);
  validate(c);
  return c;
}

void put_run_config(nn::Checkpoint& ck, const RunConfig& c) {
  for (const auto& [k, v] : config_fields(c)) ck.meta["run." + k] = v;
}

CorpusManifest open_manifest(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigError("no corpus manifest given (use --manifest or --set corpus.manifest=PATH)");
  if (!fs::exists(c.manifest)) throw DataError("manifest " + c.manifest + " does not exist");
  return read_manifest(c.manifest);
}

/// Scenario spec for this run; picks the first speaker as target when the
/// scenario needs one and none was given.
ScenarioSpec scenario_for(RunConfig& c, const CorpusManifest& m, Scenario kind) {
  ScenarioSpec s = c.scenario_spec();
  s.kind = kind;
  s.dataset = m.name;
  const bool needs = kind == Scenario::S3 || kind == Scenario::S4 || (kind == Scenario::S1 && m.speakers.size() > 1);
  if (!needs) s.target_speaker.reset();
  if (needs && !s.target_speaker) {
    s.target_speaker = m.speakers.front();
    log_info("no target speaker given; using " + *s.target_speaker);
    if (kind == c.scenario.kind) c.scenario.target_speaker = s.target_speaker;
  }
  return s;
}

void write_text(const fs::path& p, const std::string& s) { write_file(p, s); }

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream os(p, std::ios::app);
  os << line << "\n";
}

void start_run(const fs::path& dir, const RunConfig& c) {
  write_text(dir / "config.txt", "# config hash " + config_hash(c) + "\n" + serialize_config(c));
  log_info("run directory: " + dir.string());
}

SdnTrainResult pretrain_into(const ScenarioData& d, const RunConfig& c, const fs::path& dir) {
  const auto log_path = dir / "sdn_metrics.log";
  auto r = pretrain_sdn_for(d, c.model, [&](const SdnMetricsRow& row) {
    append_line(log_path, row.line());
    log_info("sdn " + row.line());
  });
  auto ck = make_sdn_checkpoint(r.model, r.steps, c.seed);
  ck.meta["initial_l1"] = format_double(r.initial_loss);
  ck.meta["final_l1"] = format_double(r.final_loss);
  put_run_config(ck, c);
  nn::save_checkpoint(ck, dir / "sdn.ckpt");
  log_info("sdn: L1 " + format_metric(r.initial_loss) + " -> " + format_metric(r.final_loss) + ", checkpoint " +
           (dir / "sdn.ckpt").string());
  return r;
}

Sdn<float> load_sdn_checked(const std::string& path, const RunConfig& c) {
  Sdn<float> sdn = load_sdn(nn::load_checkpoint(path));
  if (sdn_config_hash(sdn.config()) != sdn_config_hash(c.model.sdn_config()))
    throw nn::ConfigHashMismatch("SDN checkpoint " + path + " was trained with a different SDN config");
  return sdn;
}

/// Test examples normalized with a checkpoint's stored statistics.
std::vector<Example> test_examples(const CorpusManifest& m, const ScenarioSpec& s, const RunConfig& c,
                                   const LoadedModel& lm) {
  const SplitAssignment split = make_splits(m, s);
  check_no_leakage(m, s, split);
  const std::set<std::string> ids(split.test.begin(), split.test.end());
  std::vector<Example> out;
  for (const auto& p : prepare_corpus(m, c.model.frontend, ids)) out.push_back(make_example(p, lm.stats));
  if (lm.sdn) attach_personalized(out, *lm.sdn);
  return out;
}

void print_reports(const std::vector<MetricsReport>& rs, const fs::path& dir) {
  const std::string table = report_table(rs);
  std::cout << table;
  write_text(dir / "report.txt", table);
  write_text(dir / "report.csv", report_csv(rs));
  write_file(dir / "cc_bars.svg", cc_bar_svg(rs));
}

// ---------------------------------------------------------------- commands

int cmd_synth(const CommonFlags& f) {
  RunConfig c = build_config(f);
  if (f.out.empty()) throw ConfigError("synth: --out DIR is required");
  const auto m = synth_corpus(c.synth, c.seed, f.out);
  Fnv1a h;
  std::string sums;
  for (const auto& u : m.utterances) {
    const std::string bytes = read_file(m.resolve(u));
    h.update(bytes);
    sums += hex64(fnv1a(bytes)) + "  " + u.path.string() + "\n";
  }
  write_text(fs::path(f.out) / "checksums.txt", sums);
  std::cout << "corpus " << m.name << ": " << m.speakers.size() << " speakers, " << m.utterances.size()
            << " utterances -> " << (fs::path(f.out) / "manifest.txt").string() << "\n"
            << "checksum " << hex64(h.digest()) << "\n";
  return 0;
}

int cmd_convert(const CommonFlags& f, const std::string& input, const std::string& corpus) {
  if (f.out.empty()) throw ConfigError("convert: --out DIR is required");
  const auto r = convert_corpus(input, corpus, f.out);
  for (const auto& l : r.log) log_info(l);
  std::cout << "converted " << r.manifest.utterances.size() << " utterances (" << r.manifest.speakers.size()
            << " speakers) -> " << (fs::path(f.out) / "manifest.txt").string() << "\n";
  return 0;
}

int cmd_pretrain_sdn(const CommonFlags& f) {
  RunConfig c = build_config(f);
  const auto m = open_manifest(c);
  const auto spec = scenario_for(c, m, c.scenario.kind);
  const auto dir = make_run_dir(c.out, "pretrain-sdn");
  start_run(dir, c);
  const ScenarioData d = prepare_scenario(m, spec, c.model.frontend);
  pretrain_into(d, c, dir);
  std::cout << "sdn checkpoint: " << (dir / "sdn.ckpt").string() << "\n";
  return 0;
}

int cmd_train(const CommonFlags& f, const std::string& sdn_path, const std::string& resume_path) {
  std::optional<nn::Checkpoint> resume;
  if (!resume_path.empty()) resume = nn::load_checkpoint(resume_path);
  RunConfig c = build_config(f, resume ? &resume->meta : nullptr);
  const auto m = open_manifest(c);
  const auto spec = scenario_for(c, m, c.scenario.kind);
  const auto dir = make_run_dir(c.out, "train");
  start_run(dir, c);
  ScenarioData d = prepare_scenario(m, spec, c.model.frontend);
  const InversionConfig icfg = c.model.inversion_for(c.variant);

  std::optional<Sdn<float>> sdn;
  if (icfg.variant.use_sdn) {
    if (resume)
      sdn = load_model(*resume).sdn;
    else if (!sdn_path.empty())
      sdn = load_sdn_checked(sdn_path, c);
    else
      sdn = pretrain_into(d, c, dir).model;
    attach_personalized(d.dataset, *sdn);
  }
  Sdn<float>* sdn_ptr = sdn ? &*sdn : nullptr;
  const std::string hash = model_config_hash(icfg, sdn_ptr ? &sdn_ptr->config() : nullptr);
  if (resume) resume->require_hash(hash);

  TrainConfig tc = c.model.train;
  tc.seed = mix_seed(spec.seed, 201);
  TrainOptions opts;
  if (resume) opts.resume = &*resume;
  const auto metrics = dir / "metrics.log";
  opts.on_eval = [&](const TrainMetricsRow& row) {
    append_line(metrics, row.line());
    log_info(row.line());
  };
  auto package = [&](nn::Checkpoint ck) {
    add_model_meta(ck, icfg, sdn_ptr, d.dataset.stats);
    put_run_config(ck, c);
    return ck;
  };
  opts.on_checkpoint = [&](const nn::Checkpoint& ck) { nn::save_checkpoint(package(ck), dir / "state.ckpt"); };
  TrainResult r = train_safn(d.dataset.train, d.dataset.validation, d.dataset.stats, icfg, tc, opts);
  nn::save_checkpoint(package(r.checkpoint), dir / "model.ckpt");
  std::cout << "trained " << icfg.variant.name() << " on " << to_string(spec.kind) << " for " << r.steps
            << " steps; best step " << r.best_step << ", best val loss " << format_metric(r.best_val_loss) << "\n"
            << "checkpoint: " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_finetune(const CommonFlags& f, const std::string& ckpt_path) {
  if (ckpt_path.empty()) throw ConfigError("finetune: --checkpoint is required");
  const nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
  RunConfig c = build_config(f, &ck.meta);
  if (c.scenario.kind != Scenario::S3) throw ConfigError("finetune applies to scenario S3 (got " + to_string(c.scenario.kind) + ")");
  const auto m = open_manifest(c);
  const auto spec = scenario_for(c, m, Scenario::S3);
  LoadedModel lm = load_model(ck);
  const auto dir = make_run_dir(c.out, "finetune");
  start_run(dir, c);

  // Examples are normalized with the generic model's statistics, which in S3
  // already hold the target's fine-tune EMA stats.
  const SplitAssignment split = make_splits(m, spec);
  check_no_leakage(m, spec, split);
  std::set<std::string> ids(split.fine_tune.begin(), split.fine_tune.end());
  ids.insert(split.test.begin(), split.test.end());
  const std::set<std::string> test_ids(split.test.begin(), split.test.end());
  std::vector<Example> fine, test;
  for (const auto& p : prepare_corpus(m, c.model.frontend, ids))
    (test_ids.count(p.id) ? test : fine).push_back(make_example(p, lm.stats));
  if (lm.sdn) {
    attach_personalized(fine, *lm.sdn);
    attach_personalized(test, *lm.sdn);
  }
  const TrainConfig& tc = c.model.train;
  const auto before = evaluate(lm.model, test, lm.stats, tc.alpha, tc.beta, tc.pooling).metrics;
  TrainOptions opts;
  opts.on_eval = [&](const TrainMetricsRow& row) { append_line(dir / "metrics.log", row.line()); };
  TrainResult r = fine_tune(lm.model, fine, lm.stats, tc, opts);
  const auto after = evaluate(r.model, test, lm.stats, tc.alpha, tc.beta, tc.pooling).metrics;

  nn::Checkpoint out = r.checkpoint;
  add_model_meta(out, lm.model.config(), lm.sdn ? &*lm.sdn : nullptr, lm.stats);
  put_run_config(out, c);
  out.meta["fine_tuned_from"] = ckpt_path;
  nn::save_checkpoint(out, dir / "model.ckpt");

  auto generic = label(before, spec, lm.model.config().variant);
  generic.variant += "/generic";
  print_reports({generic, label(after, spec, lm.model.config().variant)}, dir);
  std::cout << "checkpoint: " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& ckpt_path) {
  if (f.variant == "all" || f.scenario == "all") {
    if (!ckpt_path.empty()) throw ConfigError("eval: --checkpoint cannot be combined with --variant all / --scenario all");
    RunConfig c = build_config(f);
    const auto m = open_manifest(c);
    const auto dir = make_run_dir(c.out, "eval");
    start_run(dir, c);
    std::vector<Scenario> scenarios{c.scenario.kind};
    if (f.scenario == "all") scenarios = {Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4};
    std::vector<AblationVariant> variants{c.variant};
    if (f.variant == "all") variants = AblationVariant::all();
    const auto prepared = prepare_corpus(m, c.model.frontend);
    std::vector<MetricsReport> reports;
    for (Scenario s : scenarios) {
      const auto spec = scenario_for(c, m, s);
      const ScenarioData d = prepare_scenario(m, spec, prepared);
      std::optional<SdnTrainResult> sdn;
      for (const auto& v : variants) {
        if (v.use_sdn && !sdn) {
          const auto sub = dir / ("sdn-" + to_string(s));
          fs::create_directories(sub);
          sdn = pretrain_into(d, c, sub);
        }
        log_info("training " + v.name() + " on " + to_string(s));
        ScenarioHooks hooks;
        hooks.on_eval = [&](const TrainMetricsRow& row) {
          append_line(dir / ("metrics-" + to_string(s) + "-" + v.name() + ".log"), row.line());
        };
        reports.push_back(run_variant(d, v, c.model, sdn ? &sdn->model : nullptr, hooks).report);
        log_info(to_string(s) + " " + v.name() + ": mean CC " + format_metric(reports.back().mean_cc));
      }
    }
    print_reports(reports, dir);
    return 0;
  }
  if (ckpt_path.empty()) throw ConfigError("eval: give --checkpoint, or --variant all to train and evaluate every variant");
  const nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
  RunConfig c = build_config(f, &ck.meta);
  const auto m = open_manifest(c);
  const auto spec = scenario_for(c, m, c.scenario.kind);
  const LoadedModel lm = load_model(ck);
  const auto dir = make_run_dir(c.out, "eval");
  start_run(dir, c);
  const auto test = test_examples(m, spec, c, lm);
  const TrainConfig& tc = c.model.train;
  const auto r = evaluate(lm.model, test, lm.stats, tc.alpha, tc.beta, tc.pooling);
  print_reports({label(r.metrics, spec, lm.model.config().variant)}, dir);
  return 0;
}

int cmd_infer(const CommonFlags& f, const std::string& ckpt_path, const std::string& input, const std::string& speaker) {
  if (ckpt_path.empty() || input.empty()) throw ConfigError("infer: --checkpoint and --input are required");
  const nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
  RunConfig c = build_config(f, &ck.meta);
  const LoadedModel lm = load_model(ck);
  const fs::path in(input);
  if (!fs::exists(in)) throw DataError("input " + input + " does not exist");
  MatF raw;
  double rate = 1000.0 / c.model.frontend.mfcc.hop_ms;
  if (in.extension() == ".wav") {
    raw = acoustic_features(read_wav(in), c.model.frontend).data;
  } else if (in.extension() == ".utt") {
    raw = acoustic_features(read_interchange(in).audio, c.model.frontend).data;
  } else {
    const FeatureFile ff = read_features(in);
    raw = ff.data;
    rate = ff.frame_rate_hz;
  }
  if (raw.cols() != lm.model.config().input_dim)
    throw DataError("input has " + std::to_string(raw.cols()) + " feature dims; the model expects " +
                    std::to_string(lm.model.config().input_dim));
  Example x{in.stem().string(), speaker, zscore_apply(raw, lm.stats.features), {}, {}, {}};
  if (lm.sdn) x.personalized = personalized_features(lm.sdn->encode_content(x.features), lm.sdn->encode_speaker(x.features));
  const auto out = predict(lm.model, x);

  FeatureFile pred;
  pred.id = x.id;
  pred.speaker_id = speaker.empty() ? "unknown" : speaker;
  pred.frame_rate_hz = rate;
  const MatF tongue = zscore_unapply(out.tongue, lm.stats.ema.tongue_for(speaker));
  if (out.lip.size() > 0) {
    const MatF lip = zscore_unapply(out.lip, lm.stats.ema.lip_for(speaker));
    pred.data.resize(lip.rows(), 12);
    pred.data << lip, tongue;
    pred.names = canonical_channels();
  } else {
    pred.data = tongue;
    pred.names.assign(kTongueChannels.begin(), kTongueChannels.end());
  }
  const auto dir = make_run_dir(c.out, "infer");
  const auto path = dir / (x.id + ".pred");
  write_features(pred, path);
  std::cout << "predicted " << pred.data.rows() << " frames x " << pred.data.cols() << " channels -> " << path.string()
            << "\n";
  return 0;
}

int cmd_plot(const CommonFlags& f, const std::string& ckpt_path, const std::string& report_path, int count) {
  if (!report_path.empty()) {
    const auto reports = parse_report_csv(read_file(report_path));
    RunConfig c = build_config(f);
    const auto dir = make_run_dir(c.out, "plot");
    write_file(dir / "cc_bars.svg", cc_bar_svg(reports));
    std::cout << "wrote " << (dir / "cc_bars.svg").string() << "\n";
    return 0;
  }
  if (ckpt_path.empty()) throw ConfigError("plot: give --checkpoint or --report");
  const nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
  RunConfig c = build_config(f, &ck.meta);
  const auto m = open_manifest(c);
  const auto spec = scenario_for(c, m, c.scenario.kind);
  const LoadedModel lm = load_model(ck);
  const auto test = test_examples(m, spec, c, lm);
  const auto report = label(evaluate(lm.model, test, lm.stats).metrics, spec, lm.model.config().variant);
  std::vector<std::string> ids;
  std::vector<MatF> preds, truths;
  for (std::size_t i = 0; i < test.size() && static_cast<int>(i) < count; ++i) {
    const auto& ts = lm.stats.ema.tongue_for(test[i].speaker_id);
    ids.push_back(test[i].id);
    preds.push_back(zscore_unapply(predict(lm.model, test[i]).tongue, ts));
    truths.push_back(zscore_unapply(test[i].tongue, ts));
  }
  const auto dir = make_run_dir(c.out, "plot");
  for (const auto& p : plot_outputs(report, ids, preds, truths, dir)) std::cout << "wrote " << p.string() << "\n";
  return 0;
}

int cmd_gradcheck(double tolerance, double step) {
  nn::GradCheckOptions o;
  o.tolerance = tolerance;
  o.step = step;
  bool ok = true;
  double worst = 0;
  for (const auto& r : gradcheck_suite(o)) {
    std::printf("%-20s max_rel_error=%.3e %s\n", r.name.c_str(), r.report.max_rel_error, r.report.passed() ? "pass" : "FAIL");
    ok = ok && r.report.passed();
    worst = std::max(worst, r.report.max_rel_error);
  }
  std::printf("overall max_rel_error=%.3e tolerance=%.1e %s\n", worst, tolerance, ok ? "pass" : "FAIL");
  return ok ? 0 : static_cast<int>(ErrorCategory::numeric);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-adaptive acoustic-to-articulatory inversion toolkit"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic parallel corpus");
  auto* convert = app.add_subcommand("convert", "convert an EST-track corpus to interchange files");
  auto* pretrain = app.add_subcommand("pretrain-sdn", "pretrain the speech decomposition network");
  auto* train = app.add_subcommand("train", "train an inversion model");
  auto* finetune = app.add_subcommand("finetune", "fine-tune a generic model on the S3 target speaker");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, or train and evaluate every variant");
  auto* infer = app.add_subcommand("infer", "predict articulator trajectories for one audio or feature file");
  auto* plot = app.add_subcommand("plot", "trajectory overlays and CC bar charts");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every layer");
  for (auto* s : {synth, convert, pretrain, train, finetune, eval, infer, plot}) add_common(s, flags);

  std::string input, corpus_name, sdn_path, resume_path, ckpt, infer_input, speaker, report;
  int plot_count = 3;
  double tolerance = 1e-4, step = 1e-5;
  convert->add_option("input", input, "raw corpus directory")->required();
  convert->add_option("--corpus-name", corpus_name, "corpus name (mocha and mngu0 select built-in channel maps)")
      ->required();
  train->add_option("--sdn", sdn_path, "pretrained SDN checkpoint");
  train->add_option("--resume", resume_path, "training-state checkpoint to resume from");
  for (auto* s : {finetune, eval, infer, plot}) s->add_option("--checkpoint", ckpt, "model checkpoint");
  infer->add_option("--input", infer_input, "input .wav, .utt or feature file");
  infer->add_option("--speaker", speaker, "speaker id whose EMA statistics map predictions to mm");
  plot->add_option("--report", report, "report.csv to chart");
  plot->add_option("--count", plot_count, "number of test utterances to plot");
  gradcheck->add_option("--tolerance", tolerance, "max relative error");
  gradcheck->add_option("--step", step, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  ScopedLogSink sink([&](LogLevel level, const std::string& msg) {
    if (level == LogLevel::debug || (flags.quiet && level == LogLevel::info)) return;
    std::cerr << (level == LogLevel::warn ? "warning: " : "") << msg << "\n";
  });
  try {
    if (*synth) return cmd_synth(flags);
    if (*convert) return cmd_convert(flags, input, corpus_name);
    if (*pretrain) return cmd_pretrain_sdn(flags);
    if (*train) return cmd_train(flags, sdn_path, resume_path);
    if (*finetune) return cmd_finetune(flags, ckpt);
    if (*eval) return cmd_eval(flags, ckpt);
    if (*infer) return cmd_infer(flags, ckpt, infer_input, speaker);
    if (*plot) return cmd_plot(flags, ckpt, report, plot_count);
    if (*gradcheck) return cmd_gradcheck(tolerance, step);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
