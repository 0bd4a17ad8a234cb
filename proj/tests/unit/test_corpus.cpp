#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "safn/corpus/convert.hpp"
#include "safn/corpus/ema.hpp"
#include "safn/corpus/est.hpp"
#include "safn/corpus/interchange.hpp"
#include "safn/corpus/manifest.hpp"
#include "safn/corpus/splits.hpp"
#include "safn/corpus/synth.hpp"
#include "safn/corpus/wav.hpp"

namespace fs = std::filesystem;
using namespace safn;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("safn-test-corpus-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string est_header(const std::string& extra) {
  return "EST_File Track\nDataType binary\nByteOrder 01\nNumFrames 2\nNumChannels 1\nBreaksPresent true\n" + extra +
         "Channel_0 tt_x\nEST_Header_End\n";
}

// time, break flag, value per frame; float32 little endian.
//   0.00 = 00 00 00 00, 0.01 = 0a d7 23 3c, 1.0 = 00 00 80 3f, 2.0 = 00 00 00 40
const std::string kTwoFramePayload = std::string("\x00\x00\x00\x00\x00\x00\x80\x3f\x00\x00\x80\x3f", 12) +
                                     std::string("\x0a\xd7\x23\x3c\x00\x00\x80\x3f\x00\x00\x00\x40", 12);

CorpusManifest manifest_of(const std::map<std::string, int>& counts) {
  CorpusManifest m;
  m.name = "m";
  for (const auto& [spk, n] : counts) {
    m.speakers.push_back(spk);
    for (int i = 0; i < n; ++i) m.utterances.push_back({spk + "_" + std::to_string(i), spk, spk + ".utt"});
  }
  return m;
}

std::size_t count_of(const std::vector<std::string>& ids, const std::string& spk) {
  return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [&](const std::string& id) {
    return id.rfind(spk + "_", 0) == 0;
  }));
}

}  // namespace

TEST(Est, HandBuiltBinaryFixture) {
  const auto ema = parse_est_track(est_header("") + kTwoFramePayload);
  ASSERT_EQ(ema.frames(), 2);
  ASSERT_EQ(ema.num_channels(), 1);
  EXPECT_EQ(ema.channels[0], "tt_x");
  EXPECT_FLOAT_EQ(ema.data(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(ema.data(1, 0), 2.0f);
  EXPECT_NEAR(ema.rate_hz, 100.0, 1e-3);
}

TEST(Est, AsciiAndFrameShift) {
  const std::string text =
      "EST_File Track\nDataType ascii\nNumFrames 3\nNumChannels 2\nFrame_shift 0.005\nChannel_0 a\nChannel_1 b\n"
      "EST_Header_End\n0 1 0.5\n0.005 1 1.5\n0.010 1 nan\n";
  const auto ema = parse_est_track(text);
  EXPECT_EQ(ema.frames(), 3);
  EXPECT_DOUBLE_EQ(ema.rate_hz, 200.0);
  EXPECT_FLOAT_EQ(ema.data(1, 1), 1.5f);
  EXPECT_TRUE(std::isnan(ema.data(2, 1)));
}

TEST(Est, TruncatedPayloadIsReported) {
  const std::string bytes =
      "EST_File Track\nDataType binary\nByteOrder 01\nNumFrames 3\nNumChannels 1\nBreaksPresent true\n"
      "EST_Header_End\n" +
      kTwoFramePayload;
  EXPECT_THROW(parse_est_track(bytes), PayloadLengthError);
}

TEST(Est, MissingSentinel) {
  try {
    parse_est_track("NumFrames 1\n");
    FAIL();
  } catch (const EstParseError& e) {
    EXPECT_EQ(e.line, 1);
  }
}

TEST(Est, WriteParseRoundTrip) {
  EmaTrajectory ema;
  ema.channels = {"x", "y", "z"};
  ema.rate_hz = 500;
  ema.data = MatF::Random(17, 3);
  for (bool binary : {true, false}) {
    EstWriteOptions o;
    o.binary = binary;
    const auto back = parse_est_track(write_est_track(ema, o));
    EXPECT_EQ(back.channels, ema.channels);
    EXPECT_DOUBLE_EQ(back.rate_hz, 500);
    EXPECT_LE((back.data - ema.data).cwiseAbs().maxCoeff(), binary ? 0.0f : 1e-6f);
  }
}

TEST(Wav, Pcm16RoundTrip) {
  Audio a;
  a.rate_hz = 16000;
  for (int i = 0; i < 400; ++i) a.samples.push_back(0.5f * std::sin(0.05f * static_cast<float>(i)));
  const Audio back = parse_wav(serialize_wav_pcm16(a));
  EXPECT_DOUBLE_EQ(back.rate_hz, 16000);
  ASSERT_EQ(back.samples.size(), a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(back.samples[i], a.samples[i], 1.0 / 32767);
}

TEST(Wav, GarbageIsDataError) { EXPECT_THROW(parse_wav("RIFX1234"), DataError); }

TEST(Interchange, SyntheticUtteranceRoundTrips) {
  SynthConfig cfg;
  cfg.n_speakers = 1;
  cfg.n_utterances = 2;
  const auto corpus = synth_corpus_in_memory(cfg, 5);
  const Utterance& u = corpus.utterances.front();
  const Utterance back = parse_utterance(serialize_utterance(u));
  EXPECT_EQ(back.id, u.id);
  EXPECT_EQ(back.speaker_id, u.speaker_id);
  EXPECT_EQ(back.ema.channels, u.ema.channels);
  EXPECT_EQ(back.ema.rate_hz, u.ema.rate_hz);
  EXPECT_EQ(back.ema.data, u.ema.data);
  EXPECT_EQ(back.audio.rate_hz, u.audio.rate_hz);
  EXPECT_EQ(back.audio.samples, u.audio.samples);
}

TEST(Interchange, CorruptPayloadFailsChecksum) {
  SynthConfig cfg;
  cfg.n_speakers = 1;
  cfg.n_utterances = 1;
  std::string bytes = serialize_utterance(synth_corpus_in_memory(cfg, 1).utterances.front());
  bytes[bytes.size() - 3] ^= 0x40;
  EXPECT_THROW(parse_utterance(bytes), DataError);
}

TEST(Ema, SelectChannelsSplitsBlocks) {
  EmaTrajectory ema;
  ema.channels = canonical_channels();
  std::reverse(ema.channels.begin(), ema.channels.end());
  ema.data = MatF::Zero(4, 12);
  for (int c = 0; c < 12; ++c)
    if (ema.channels[static_cast<std::size_t>(c)][0] != 'T') ema.data.col(c).setConstant(1.0f + static_cast<float>(c));
  const auto blocks = select_channels(ema);
  EXPECT_TRUE((blocks.tongue.array() == 0).all());
  EXPECT_TRUE((blocks.lip.array() != 0).all());
  EXPECT_FLOAT_EQ(blocks.lip(0, 0), 12.0f);  // ULx was the last column
}

TEST(Ema, MissingChannelsAreListed) {
  EmaTrajectory ema;
  ema.channels = {"ULx", "T1x"};
  ema.data = MatF::Zero(2, 2);
  try {
    select_channels(ema);
    FAIL();
  } catch (const ChannelMapError& e) {
    EXPECT_EQ(e.missing.size(), 10u);
  }
}

TEST(Ema, BuiltinMapsCoverCanonicalChannels) {
  for (const char* corpus : {"mocha", "mngu0"}) {
    std::set<std::string> targets;
    for (const auto& [raw, canon] : builtin_channel_map(corpus)) targets.insert(canon);
    EXPECT_EQ(targets.size(), 12u) << corpus;
  }
}

TEST(Ema, CleanInterpolatesShortGapsAndDropsLongOnes) {
  EmaTrajectory ema;
  ema.channels = {"a"};
  ema.data = MatF(8, 1);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  ema.data << nan, 1, 2, nan, nan, 5, 6, nan;
  const auto clean = clean_trajectory(ema);
  ASSERT_TRUE(clean);
  MatF expected(8, 1);
  expected << 1, 1, 2, 3, 4, 5, 6, 6;
  EXPECT_LT((clean->data - expected).cwiseAbs().maxCoeff(), 1e-6f);

  ema.data << 0, nan, nan, nan, nan, nan, nan, 1;
  EXPECT_FALSE(clean_trajectory(ema, {5}));
}

TEST(Manifest, RoundTripAndValidation) {
  const auto dir = fresh_dir("manifest");
  CorpusManifest m = manifest_of({{"a", 3}, {"b", 2}});
  m.root = dir;
  write_manifest(m, dir / "manifest.txt");
  const auto back = read_manifest(dir / "manifest.txt");
  EXPECT_EQ(back.name, m.name);
  EXPECT_EQ(back.speakers, m.speakers);
  ASSERT_EQ(back.utterances.size(), 5u);
  EXPECT_EQ(back.utterances[4].id, "b_1");
  EXPECT_EQ(back.resolve(back.utterances[0]), dir / "a.utt");

  m.utterances.push_back(m.utterances.front());
  EXPECT_THROW(m.validate(), DataError);
  m.utterances.pop_back();
  m.utterances.push_back({"x", "ghost", "x.utt"});
  EXPECT_THROW(m.validate(), DataError);
}

TEST(Splits, SingleSpeakerEightOneOne) {
  const auto m = manifest_of({{"spk", 460}});
  const auto s = make_splits(m, {Scenario::S1, "m", std::nullopt, 0});
  EXPECT_EQ(s.train.size(), 368u);
  EXPECT_EQ(s.validation.size(), 46u);
  EXPECT_EQ(s.test.size(), 46u);
  EXPECT_TRUE(s.fine_tune.empty());
}

TEST(Splits, MultiSpeakerProportionsPerSpeaker) {
  std::map<std::string, int> counts;
  for (int k = 0; k < 8; ++k) counts["s" + std::to_string(k)] = 40 + 13 * k;
  const auto m = manifest_of(counts);
  const auto s = make_splits(m, {Scenario::S2, "m", std::nullopt, 4});
  for (const auto& [spk, n] : counts) {
    EXPECT_EQ(count_of(s.test, spk), static_cast<std::size_t>(n / 10));
    EXPECT_EQ(count_of(s.validation, spk), static_cast<std::size_t>(n / 10));
    EXPECT_EQ(count_of(s.train, spk), static_cast<std::size_t>(n - 2 * (n / 10)));
  }
}

TEST(Splits, SpeakerIndependentHoldsOutTarget) {
  std::map<std::string, int> counts;
  for (const char* s : {"F01", "F02", "F03", "F04", "M01", "M02", "M03", "M04"}) counts[s] = 90;
  const auto m = manifest_of(counts);
  const ScenarioSpec spec{Scenario::S4, "m", "F01", 2};
  const auto s = make_splits(m, spec);
  EXPECT_EQ(count_of(s.test, "F01"), 90u);
  EXPECT_EQ(s.test.size(), 90u);
  EXPECT_EQ(count_of(s.train, "F01") + count_of(s.validation, "F01"), 0u);
  EXPECT_NO_THROW(check_no_leakage(m, spec, s));
}

TEST(Splits, AdaptationTargetOnlyFineTuneAndTest) {
  const auto m = manifest_of({{"a", 50}, {"b", 50}, {"c", 50}});
  const auto s = make_splits(m, {Scenario::S3, "m", "b", 1});
  EXPECT_EQ(count_of(s.fine_tune, "b"), 40u);
  EXPECT_EQ(count_of(s.test, "b"), 10u);
  EXPECT_EQ(count_of(s.train, "b") + count_of(s.validation, "b"), 0u);
  EXPECT_EQ(count_of(s.train, "a"), 40u);
  EXPECT_EQ(count_of(s.validation, "a"), 10u);
}

TEST(Splits, DeterministicGivenSeed) {
  const auto m = manifest_of({{"a", 60}, {"b", 60}});
  const ScenarioSpec spec{Scenario::S2, "m", std::nullopt, 9};
  EXPECT_EQ(make_splits(m, spec).test, make_splits(m, spec).test);
  auto other = spec;
  other.seed = 10;
  EXPECT_NE(make_splits(m, spec).test, make_splits(m, other).test);
}

TEST(Splits, PropertyDisjointAndComplete) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, int> counts;
    const int k = 2 + static_cast<int>(gen() % 6);
    for (int i = 0; i < k; ++i) counts["s" + std::to_string(i)] = 1 + static_cast<int>(gen() % 120);
    const auto m = manifest_of(counts);
    for (Scenario kind : {Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4}) {
      ScenarioSpec spec{kind, "m", "s1", gen()};
      if (kind == Scenario::S2) spec.target_speaker.reset();
      const auto s = make_splits(m, spec);
      EXPECT_NO_THROW(check_no_leakage(m, spec, s));
      std::set<std::string> all;
      for (const auto* l : {&s.train, &s.validation, &s.fine_tune, &s.test}) all.insert(l->begin(), l->end());
      EXPECT_EQ(all.size(), s.total());
      const std::size_t expected = kind == Scenario::S1 ? static_cast<std::size_t>(counts["s1"]) : m.utterances.size();
      EXPECT_EQ(s.total(), expected);
    }
  }
}

TEST(Splits, GuardFiresOnCorruptedSplit) {
  const auto m = manifest_of({{"a", 20}, {"b", 20}});
  const ScenarioSpec spec{Scenario::S4, "m", "a", 0};
  auto s = make_splits(m, spec);
  s.validation.push_back(s.test.front());
  s.test.erase(s.test.begin());
  EXPECT_THROW(check_no_leakage(m, spec, s), LeakageError);

  auto dup = make_splits(m, spec);
  dup.train.push_back(dup.validation.front());
  EXPECT_THROW(check_no_leakage(m, spec, dup), LeakageError);
}

TEST(Splits, ScenarioPreconditions) {
  const auto two = manifest_of({{"a", 10}, {"b", 10}});
  EXPECT_THROW(make_splits(two, {Scenario::S3, "m", std::nullopt, 0}), ConfigError);
  EXPECT_THROW(make_splits(two, {Scenario::S4, "m", "zz", 0}), ConfigError);
  EXPECT_THROW(make_splits(two, {Scenario::S1, "m", std::nullopt, 0}), ConfigError);
  EXPECT_THROW(make_splits(manifest_of({{"a", 10}}), {Scenario::S4, "m", "a", 0}), ConfigError);
  EXPECT_THROW(parse_scenario("S5"), ConfigError);
}

TEST(Synth, DeterministicGivenSeed) {
  SynthConfig cfg;
  cfg.n_speakers = 2;
  cfg.n_utterances = 3;
  const auto a = synth_corpus_in_memory(cfg, 77), b = synth_corpus_in_memory(cfg, 77);
  ASSERT_EQ(a.utterances.size(), 6u);
  for (std::size_t i = 0; i < a.utterances.size(); ++i)
    EXPECT_EQ(serialize_utterance(a.utterances[i]), serialize_utterance(b.utterances[i]));
  const auto c = synth_corpus_in_memory(cfg, 78);
  EXPECT_NE(serialize_utterance(a.utterances[0]), serialize_utterance(c.utterances[0]));
}

TEST(Synth, EmaIsLinearInSmoothedPhones) {
  SynthConfig cfg;
  cfg.n_speakers = 1;
  cfg.n_utterances = 20;
  const auto corpus = synth_corpus_in_memory(cfg, 3);
  MatD X(0, cfg.n_phones + 1), Y(0, 12);
  for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
    const MatD& S = corpus.smoothed_onehots[static_cast<std::size_t>(corpus.sentence_of[u])];
    const Eigen::Index r = X.rows();
    X.conservativeResize(r + S.rows(), Eigen::NoChange);
    Y.conservativeResize(r + S.rows(), Eigen::NoChange);
    X.block(r, 0, S.rows(), cfg.n_phones) = S;
    X.block(r, cfg.n_phones, S.rows(), 1).setOnes();
    Y.middleRows(r, S.rows()) = corpus.utterances[u].ema.data.cast<double>();
  }
  const MatD W = X.colPivHouseholderQr().solve(Y);
  const double residual = std::sqrt((X * W - Y).squaredNorm() / static_cast<double>(Y.size()));
  EXPECT_LT(residual, 1e-4);
}

TEST(Synth, SpeakersShareEmaButNotAudio) {
  SynthConfig cfg;
  cfg.n_speakers = 2;
  cfg.n_utterances = 1;
  const auto corpus = synth_corpus_in_memory(cfg, 8);
  EXPECT_EQ(corpus.utterances[0].ema.data, corpus.utterances[1].ema.data);
  EXPECT_NE(corpus.utterances[0].audio.samples, corpus.utterances[1].audio.samples);
}

TEST(Synth, WritesManifestOnDisk) {
  const auto dir = fresh_dir("synth");
  SynthConfig cfg;
  cfg.n_speakers = 2;
  cfg.n_utterances = 2;
  const auto m = synth_corpus(cfg, 1, dir);
  const auto back = read_manifest(dir / "manifest.txt");
  EXPECT_EQ(back.utterances.size(), 4u);
  EXPECT_EQ(load_utterance(back, back.utterances[3]).id, m.utterances[3].id);
}

TEST(Convert, EstAndWavPairsBecomeInterchange) {
  const auto in = fresh_dir("convert-in");
  const auto out = fresh_dir("convert-out");
  EmaTrajectory ema;
  for (const auto& [raw, canon] : builtin_channel_map("mocha")) ema.channels.push_back(raw);
  ema.rate_hz = 100;
  ema.data = MatF::Random(50, 12);
  write_file(in / "fsew0_001.ema", write_est_track(ema));
  Audio a;
  a.samples.assign(8000, 0.1f);
  write_file(in / "fsew0_001.wav", serialize_wav_pcm16(a));
  write_file(in / "orphan.ema", write_est_track(ema));

  const auto r = convert_corpus(in, "mocha", out);
  ASSERT_EQ(r.manifest.utterances.size(), 1u);
  EXPECT_EQ(r.manifest.speakers, std::vector<std::string>{"fsew0"});
  const auto u = load_utterance(read_manifest(out / "manifest.txt"), r.manifest.utterances[0]);
  EXPECT_NO_THROW(select_channels(u.ema));
  EXPECT_TRUE(fs::exists(out / "convert.log"));
  EXPECT_TRUE(fs::exists(in / "orphan.ema"));
}

TEST(Convert, RejectsEmptyInputAndInPlaceOutput) {
  const auto in = fresh_dir("convert-empty");
  EXPECT_THROW(convert_corpus(in, "x", fresh_dir("convert-empty-out")), DataError);
  EXPECT_THROW(convert_corpus(in, "x", in), ConfigError);
}
