// Acceptance run: ten criteria, one PASS/FAIL line each at the end.
// Exit status is non-zero if any criterion fails.
//
//   acceptance [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "safn/safn.hpp"

namespace fs = std::filesystem;
using namespace safn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("safn-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunConfig desk_config() {
  RunConfig c;
  load_config_file(c, fs::path(SAFN_SOURCE_DIR) / "configs" / "desk.conf");
  return c;
}

CorpusManifest synthetic_corpus(std::uint64_t seed, const SynthConfig& cfg = {}) {
  const auto dir = work_dir() / ("synth-" + std::to_string(seed));
  if (fs::exists(dir / "manifest.txt")) return read_manifest(dir / "manifest.txt");
  return synth_corpus(cfg, seed, dir);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- 1

Outcome table_arithmetic() {
  struct Row {
    const char* name;
    std::vector<double> channels;
    double mean;
  };
  const std::vector<Row> rows{
      {"S1(G)", {0.789, 0.738, 0.990, 0.619, 1.051, 0.796}, 0.830},
      {"S1(M)", {1.289, 1.497, 1.403, 1.442, 1.571, 1.551}, 1.459},
      {"S1(H)", {1.419, 1.530, 1.601, 1.552, 1.559, 1.443}, 1.517},
      {"S2", {1.488, 1.857, 1.701, 1.631, 1.709, 1.589}, 1.662},
      {"S3", {1.411, 1.509, 1.551, 1.563, 1.534, 1.535}, 1.507},
      {"S4", {2.184, 3.077, 2.938, 2.621, 2.412, 3.096}, 2.721},
  };
  Outcome o{true, ""};
  double worst = 0;
  for (const auto& r : rows) {
    const double err = std::abs(aggregate(r.channels) - r.mean);
    worst = std::max(worst, err);
    // printed values have three decimals, so an exact-decimal error of 0.0005
    // can come out a few ulps above it in binary
    if (err > 0.0005 + 1e-12) {
      o.pass = false;
      o.detail += std::string(r.name) + " off by " + fmt(err) + "; ";
    }
  }
  o.detail += "max |aggregate - printed| = " + fmt(worst) + " (tolerance 0.0005)";
  return o;
}

// ---------------------------------------------------------------- 2

struct NormCheck {
  double max_abs_mean = 0;
  double min_std = 1, max_std = 1;
  double var_at_min_std = 0;
  int channels = 0, skipped = 0, outside = 0;

  void visit(const MatD& pre, const MatD& normalized, double eps) {
    const MatD mu = pre.colwise().mean();
    for (Eigen::Index c = 0; c < pre.cols(); ++c) {
      const double var = (pre.col(c).array() - mu(0, c)).square().mean();
      if (var < 100 * eps) {
        ++skipped;
        continue;
      }
      const auto col = normalized.col(c).array();
      const double m = col.mean();
      const double sd = std::sqrt((col - m).square().mean());
      max_abs_mean = std::max(max_abs_mean, std::abs(m));
      if (sd < min_std) {
        min_std = sd;
        var_at_min_std = var;
      }
      max_std = std::max(max_std, sd);
      if (sd < 0.999 || sd > 1.001) ++outside;
      ++channels;
    }
  }
  bool ok() const { return channels > 0 && max_abs_mean <= 1e-5 && min_std >= 0.999 && max_std <= 1.001; }
};

Outcome norm_invariants() {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto randn = [&](Eigen::Index r, Eigen::Index c, double scale, double shift) {
    MatD m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = shift + scale * nd(gen);
    return m;
  };
  NormCheck check;
  double identity_err = 0;
  const SdnConfig base = RunConfig{}.model.sdn_config();
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index frames = 20 + 7 * trial;
    const double scale = std::pow(10.0, -1.0 + 0.15 * trial);
    const double shift = -5.0 + 0.5 * trial;

    // free-standing IN on random inputs
    const MatD x = randn(frames, 1 + trial % 9, scale, shift);
    nn::InstanceNormCache<double> nc;
    nn::instance_norm(x, base.eps, &nc);
    check.visit(x, nc.normalized, base.eps);

    // AdaIN(IN(x)) with the input's own statistics restores the input
    const auto stats = nn::channel_stats(x, base.eps);
    const MatD back = nn::adain(x, stats.sigma, stats.mean, base.eps);
    identity_err = std::max(identity_err, (back - x).cwiseAbs().maxCoeff());

    // every IN site inside the SDN: content encoder blocks and decoder AdaIN
    if (trial < 4) {
      Sdn<double> sdn(base);
      Rng rng(100 + static_cast<std::uint64_t>(trial));
      sdn.init(rng);
      const MatD in = randn(frames + base.min_frames(), base.input_dim, 1.0, 0.0);
      typename Sdn<double>::Cache cache;
      sdn.reconstruct(in, &cache);
      for (std::size_t i = 0; i < cache.content.norm.size(); ++i)
        check.visit(cache.content.conv_out[i], cache.content.norm[i].normalized, base.eps);
      for (std::size_t i = 0; i < cache.decoder.adain.size(); ++i)
        check.visit(cache.decoder.conv_out[i], cache.decoder.adain[i].norm.normalized, base.eps);
    }
  }
  const bool pass = check.ok() && identity_err <= 1e-6;
  return {pass, std::to_string(check.channels) + " channels (" + std::to_string(check.skipped) +
                    " below 100 eps skipped): max |mean| " + fmt(check.max_abs_mean, 3) + ", std in [" +
                    fmt(check.min_std, 7) + ", " + fmt(check.max_std, 7) + "], " + std::to_string(check.outside) +
                    " outside [0.999, 1.001] (lowest at var = " + fmt(check.var_at_min_std / base.eps, 4) +
                    " eps); AdaIN(IN) identity error " +
                    fmt(identity_err, 3)};
}

// ---------------------------------------------------------------- 3

Outcome gradient_checks() {
  nn::GradCheckOptions o;
  o.step = 1e-5;
  o.tolerance = 1e-4;
  bool pass = true;
  double worst = 0;
  std::string failing;
  for (const auto& r : gradcheck_suite(o)) {
    worst = std::max(worst, r.report.max_rel_error);
    if (!r.report.passed()) {
      pass = false;
      failing += " " + r.name;
    }
  }
  return {pass, "11 checks, max relative error " + fmt(worst, 3) + (failing.empty() ? "" : "; failing:" + failing)};
}

// ---------------------------------------------------------------- 4

Outcome loss_cases() {
  auto row = [](std::initializer_list<double> v) {
    MatD m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
  };
  const MatD zero = MatD::Zero(1, 6);
  struct Case {
    MatD lip_err, tongue_err;
    double alpha, beta, expected;
  };
  const std::vector<Case> cases{
      {row({2, 0, 0, 0, 0, 0}), zero, 0.5, 0.5, 2.0},
      {MatD::Ones(1, 6), MatD::Ones(1, 6), 0.5, 0.5, 6.0},
      {zero, row({0, 3, 0, 0, 0, 4}), 0.5, 0.5, 12.5},
      {row({1, -1, 0, 0, 0, 0}), row({0, 0, 2, 0, 0, 0}), 1.0, 0.25, 3.0},
      {MatD::Zero(3, 6), MatD::Zero(3, 6), 0.5, 0.5, 0.0},
  };
  double worst_case = 0;
  for (const auto& c : cases) {
    const MatD truth = MatD::Zero(c.lip_err.rows(), 6);
    worst_case = std::max(worst_case, std::abs(safn_loss(truth, c.lip_err, truth, c.tongue_err, c.alpha, c.beta) - c.expected));
  }
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3, 3), w(0, 2);
  double worst_split = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index T = 1 + static_cast<Eigen::Index>(gen() % 40);
    auto rnd = [&] {
      MatD m(T, 6);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(gen);
      return m;
    };
    const MatD lt = rnd(), lp = rnd(), tt = rnd(), tp = rnd();
    const double a = w(gen), b = w(gen);
    const double whole = safn_loss(lt, lp, tt, tp, a, b);
    const double parts = safn_loss(lt, lp, tt, tp, a, 0.0) + safn_loss(lt, lp, tt, tp, 0.0, b);
    worst_split = std::max(worst_split, std::abs(whole - parts) / std::max(1.0, std::abs(whole)));
  }
  return {worst_case <= 1e-10 && worst_split <= 1e-10,
          "hand cases max error " + fmt(worst_case, 3) + "; decomposition max error " + fmt(worst_split, 3) +
              " over 100 random inputs"};
}

// ---------------------------------------------------------------- 5

Outcome blstm_average() {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index in = 1 + trial % 7, hidden = 2 + trial % 5, frames = 1 + 3 * trial;
    nn::Blstm<double> b(in, hidden);
    Rng rng(static_cast<std::uint64_t>(trial));
    b.init(rng);
    MatD x(frames, in);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = nd(gen);
    typename nn::Blstm<double>::Taps taps;
    const MatD out = b.forward(x, nullptr, &taps);
    worst = std::max(worst, (out - 0.5 * (taps.forward_out + taps.backward_out)).cwiseAbs().maxCoeff());
  }
  return {worst <= 4 * std::numeric_limits<double>::epsilon(), "max |O - (O_fwd + O_bwd)/2| = " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 6

CorpusManifest random_manifest(std::mt19937_64& gen, int speakers) {
  CorpusManifest m;
  m.name = "random";
  for (int s = 0; s < speakers; ++s) {
    const std::string spk = "spk" + std::to_string(s);
    m.speakers.push_back(spk);
    const int n = 10 + static_cast<int>(gen() % 200);
    for (int u = 0; u < n; ++u) m.utterances.push_back({spk + "_" + std::to_string(u), spk, spk + ".utt"});
  }
  return m;
}

Outcome split_protocol() {
  std::mt19937_64 gen(3);
  int checked = 0;
  std::string problem;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok && problem.empty()) problem = what;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const int n_spk = 2 + static_cast<int>(gen() % 7);
    const CorpusManifest m = random_manifest(gen, n_spk);
    std::map<std::string, std::size_t> per_speaker;
    std::map<std::string, std::string> speaker_of;
    for (const auto& u : m.utterances) {
      ++per_speaker[u.speaker_id];
      speaker_of[u.id] = u.speaker_id;
    }
    const std::string target = m.speakers[gen() % m.speakers.size()];
    for (Scenario kind : {Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4}) {
      ScenarioSpec s{kind, m.name, target, gen()};
      if (kind == Scenario::S2) s.target_speaker.reset();
      const SplitAssignment a = make_splits(m, s);
      check_no_leakage(m, s, a);
      ++checked;
      std::set<std::string> all;
      std::size_t listed = 0;
      std::map<std::string, std::map<std::string, std::size_t>> count;  // split -> speaker -> n
      auto add = [&](const std::vector<std::string>& ids, const std::string& split) {
        for (const auto& id : ids) {
          all.insert(id);
          ++listed;
          ++count[split][speaker_of.at(id)];
        }
      };
      add(a.train, "train");
      add(a.validation, "validation");
      add(a.fine_tune, "fine_tune");
      add(a.test, "test");
      const std::string tag = to_string(kind) + " trial " + std::to_string(trial);
      expect(all.size() == listed, tag + ": splits overlap");
      for (const auto& spk : m.speakers) {
        const std::size_t n = per_speaker[spk];
        const bool is_target = spk == target;
        auto got = [&](const char* split) { return count[split][spk]; };
        switch (kind) {
          case Scenario::S1:
            if (!is_target) {
              expect(got("train") + got("validation") + got("test") == 0, tag + ": non-target speaker in S1");
              break;
            }
            [[fallthrough]];
          case Scenario::S2:
            expect(got("test") == n / 10 && got("validation") == n / 10 && got("train") == n - 2 * (n / 10) &&
                       got("fine_tune") == 0,
                   tag + ": 8:1:1 per speaker violated for " + spk);
            break;
          case Scenario::S3:
            if (is_target)
              expect(got("test") == n * 2 / 10 && got("fine_tune") == n - n * 2 / 10 && got("train") == 0 &&
                         got("validation") == 0,
                     tag + ": target fine-tune/test 80/20 violated");
            else
              expect(got("validation") == n * 2 / 10 && got("train") == n - n * 2 / 10 && got("test") == 0 &&
                         got("fine_tune") == 0,
                     tag + ": non-target train/validation 80/20 violated");
            break;
          case Scenario::S4:
            if (is_target)
              expect(got("test") == n && got("train") + got("validation") + got("fine_tune") == 0,
                     tag + ": target not exclusively in test");
            else
              expect(got("test") == 0 && got("train") + got("validation") == n, tag + ": non-target in test");
            break;
        }
      }
    }
  }
  // deliberately corrupted S4 split: one target utterance moved into train
  std::mt19937_64 g2(9);
  const CorpusManifest m = random_manifest(g2, 4);
  const ScenarioSpec s{Scenario::S4, m.name, m.speakers[1], 1};
  SplitAssignment bad = make_splits(m, s);
  bad.train.push_back(bad.test.back());
  bad.test.pop_back();
  bool fired = false;
  try {
    check_no_leakage(m, s, bad);
  } catch (const LeakageError&) {
    fired = true;
  }
  expect(fired, "leakage guard did not fire on a corrupted S4 split");
  return {problem.empty(), problem.empty() ? std::to_string(checked) + " random splits satisfy the scenario rules; leakage guard fired"
                                           : problem};
}

// ---------------------------------------------------------------- 7

Outcome disentanglement() {
  const RunConfig c = desk_config();
  Outcome o{true, ""};
  for (std::uint64_t seed : kSeeds) {
    const auto m = synthetic_corpus(seed);
    const ScenarioData d = prepare_scenario(m, {Scenario::S2, m.name, std::nullopt, seed}, c.model.frontend);
    Stopwatch w;
    const auto sdn = pretrain_sdn_for(d, c.model, {});
    const double secs = w.seconds();
    std::map<std::string, int> label;
    for (const auto& s : m.speakers) label.emplace(s, static_cast<int>(label.size()));
    auto embed = [&](const std::vector<Example>& xs, bool speaker, MatD& X, std::vector<int>& y) {
      for (const auto& x : xs) {
        const MatD r = speaker ? MatD(sdn.model.encode_speaker(x.features).vector.cast<double>())
                               : MatD(sdn.model.encode_content(x.features).data.cast<double>().colwise().mean());
        X.conservativeResize(X.rows() + 1, r.cols());
        X.row(X.rows() - 1) = r.row(0);
        y.push_back(label.at(x.speaker_id));
      }
    };
    double acc[2];
    for (int k = 0; k < 2; ++k) {
      MatD Xtr, Xte;
      std::vector<int> ytr, yte;
      embed(d.dataset.train, k == 0, Xtr, ytr);
      embed(d.dataset.test, k == 0, Xte, yte);
      acc[k] = linear_probe_accuracy(Xtr, ytr, Xte, yte);
    }
    const double chance = 1.0 / static_cast<double>(m.speakers.size());
    const bool ok = acc[0] >= 0.90 && acc[1] <= chance + 0.15 && secs <= 600;
    std::printf("  [7] seed %llu: speaker probe %.3f, content probe %.3f (chance %.2f), SDN %.1f s\n",
                static_cast<unsigned long long>(seed), acc[0], acc[1], chance, secs);
    o.pass = o.pass && ok;
    o.detail += "seed " + std::to_string(seed) + ": " + fmt(acc[0], 3) + "/" + fmt(acc[1], 3) + "; ";
  }
  o.detail += "(speaker >= 0.90, content <= chance + 0.15)";
  return o;
}

// ---------------------------------------------------------------- 8

Outcome ablation_ordering() {
  const RunConfig c = desk_config();
  const auto variants = AblationVariant::all();
  Stopwatch total;
  Outcome o{true, ""};
  for (Scenario kind : {Scenario::S1, Scenario::S4}) {
    std::map<std::string, std::vector<double>> cc;
    for (std::uint64_t seed : kSeeds) {
      const auto m = synthetic_corpus(seed);
      const ScenarioData d = prepare_scenario(m, {kind, m.name, m.speakers.front(), seed}, c.model.frontend);
      const auto sdn = pretrain_sdn_for(d, c.model, {});
      std::printf("  [8] %s seed %llu:", to_string(kind).c_str(), static_cast<unsigned long long>(seed));
      for (const auto& v : variants) {
        const auto r = run_variant(d, v, c.model, &sdn.model);
        cc[v.name()].push_back(r.report.mean_cc);
        std::printf(" %s=%.5f", v.name().c_str(), r.report.mean_cc);
        std::fflush(stdout);
      }
      std::printf("\n");
    }
    // grouping: AFN in S1, SDN in S4
    std::vector<double> with, without;
    for (const auto& v : variants) {
      const bool has = kind == Scenario::S1 ? v.use_afn : v.use_sdn;
      (has ? with : without).push_back(median(cc[v.name()]));
    }
    const double a = std::accumulate(with.begin(), with.end(), 0.0) / static_cast<double>(with.size());
    const double b = std::accumulate(without.begin(), without.end(), 0.0) / static_cast<double>(without.size());
    const char* module = kind == Scenario::S1 ? "AFN" : "SDN";
    std::printf("  [8] %s: median CC with %s %.6f, without %.6f\n", to_string(kind).c_str(), module, a, b);
    o.pass = o.pass && a >= b;
    o.detail += to_string(kind) + " with " + module + " " + fmt(a, 6) + " vs without " + fmt(b, 6) + "; ";
  }
  const double secs = total.seconds();
  o.pass = o.pass && secs <= 3600;
  o.detail += fmt(secs, 4) + " s";
  return o;
}

// ---------------------------------------------------------------- 9

int run(const std::string& cmd) {
  std::printf("  [9] $ %s\n", cmd.c_str());
  std::fflush(stdout);
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path newest(const fs::path& root, const std::string& prefix) {
  fs::path best;
  for (const auto& e : fs::directory_iterator(root))
    if (e.path().filename().string().rfind(prefix, 0) == 0 && (best.empty() || e.path() > best)) best = e.path();
  return best;
}

Outcome end_to_end() {
  const fs::path root = work_dir() / "e2e";
  const fs::path runs = root / "runs";
  fs::create_directories(runs);
  const std::string cli = SAFN_CLI_PATH;
  const std::string conf = (fs::path(SAFN_SOURCE_DIR) / "configs" / "desk.conf").string();
  const std::string common = " --quiet --seed 1 --out " + runs.string() + " --config " + conf;
  Stopwatch w;
  if (run(cli + " synth --quiet --seed 1 --out " + (root / "corpus").string()) != 0) return {false, "synth failed"};
  const std::string manifest = " --manifest " + (root / "corpus" / "manifest.txt").string();
  if (run(cli + " pretrain-sdn" + common + manifest + " --scenario S1") != 0) return {false, "pretrain-sdn failed"};
  const fs::path sdn = newest(runs, "pretrain-sdn-") / "sdn.ckpt";
  if (run(cli + " train" + common + manifest + " --scenario S1 --variant SAFN --sdn " + sdn.string()) != 0)
    return {false, "train failed"};
  const fs::path model = newest(runs, "train-") / "model.ckpt";
  if (run(cli + " eval" + common + " --checkpoint " + model.string()) != 0) return {false, "eval failed"};
  const auto reports = parse_report_csv(read_file(newest(runs, "eval-") / "report.csv"));
  const double secs = w.seconds();
  if (reports.size() != 1) return {false, "report.csv holds " + std::to_string(reports.size()) + " rows"};
  const double cc = reports.front().mean_cc;
  return {cc >= 0.8 && secs <= 900, "test mean CC " + fmt(cc, 4) + " (>= 0.8), " + fmt(secs, 3) + " s (<= 900 s)"};
}

// ---------------------------------------------------------------- 10

Outcome overfit() {
  const RunConfig c = desk_config();
  const auto m = synthetic_corpus(1);
  const auto prepared = prepare_corpus(m, c.model.frontend, {m.utterances.front().id});
  Dataset d;
  SplitAssignment split;
  split.train.push_back(prepared.front().id);
  d.stats = fit_dataset_stats(prepared, split);
  d.train.push_back(make_example(prepared.front(), d.stats));

  SdnTrainConfig st = c.model.sdn_train;
  st.iterations = 200;
  st.batch_size = 1;
  st.seed = 4;
  const auto sdn = pretrain_sdn(acoustic_view(d.train), {}, c.model.sdn_config(), st);
  attach_personalized(d.train, sdn.model);

  const InversionConfig icfg = c.model.inversion_for(AblationVariant::make(VariantKind::safn));
  TrainConfig tc = c.model.train;
  tc.batch_size = 1;
  tc.eval_every = 100;
  tc.seed = 4;
  auto rmse = [&](const InversionModel<float>& model) {
    const auto out = predict(model, d.train.front());
    const auto& x = d.train.front();
    const double n = static_cast<double>(x.lip.size());
    return std::pair{std::sqrt((out.lip - x.lip).cast<double>().squaredNorm() / n),
                     std::sqrt((out.tongue - x.tongue).cast<double>().squaredNorm() / n)};
  };
  tc.iterations = 0;
  const auto before = rmse(train_safn(d.train, {}, d.stats, icfg, tc).last);
  tc.iterations = 500;
  const auto after = rmse(train_safn(d.train, {}, d.stats, icfg, tc).last);
  const double lip_ratio = after.first / before.first, tongue_ratio = after.second / before.second;
  return {lip_ratio < 0.1 && tongue_ratio < 0.1,
          "lip RMSE " + fmt(before.first) + " -> " + fmt(after.first) + " (x" + fmt(lip_ratio, 3) + "), tongue RMSE " +
              fmt(before.second) + " -> " + fmt(after.second) + " (x" + fmt(tongue_ratio, 3) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    }
  ScopedLogSink quiet([](LogLevel level, const std::string& msg) {
    if (level == LogLevel::warn) std::cerr << "warning: " << msg << '\n';
  });

  const std::vector<Criterion> criteria{
      {1, "aggregate reproduces the six SAFN mean RMSE values", table_arithmetic},
      {2, "instance norm invariants and AdaIN identity", norm_invariants},
      {3, "gradient checks", gradient_checks},
      {4, "combined loss hand cases and decomposition", loss_cases},
      {5, "BLSTM output is the direction average", blstm_average},
      {6, "scenario split protocol and leakage guard", split_protocol},
      {7, "SDN disentanglement probes", disentanglement},
      {8, "ablation ordering", ablation_ordering},
      {9, "end-to-end CLI smoke run", end_to_end},
      {10, "single-utterance overfit", overfit},
  };
  std::vector<std::string> lines;
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Stopwatch w;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "criterion %2d: %s", c.id, o.pass ? "PASS" : "FAIL");
    const std::string line = std::string(buf) + "  " + c.name + " | " + o.detail + " | " + fmt(w.seconds(), 3) + " s";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    lines.push_back(line);
    all = all && o.pass;
  }
  std::printf("\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  std::error_code ec;
  fs::remove_all(work_dir(), ec);
  return all ? 0 : 1;
}
