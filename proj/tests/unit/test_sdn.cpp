#include <gtest/gtest.h>

#include <cmath>

#include "safn/sdn/sdn.hpp"
#include "safn/training/gradcheck_suite.hpp"
#include "safn/training/train.hpp"

using namespace safn;

namespace {

SdnConfig small_config(int input_dim = 6) {
  SdnConfig c;
  c.input_dim = input_dim;
  c.speaker_channels = {8, 8};
  c.speaker_dim = 5;
  c.content_dim = 4;
  c.content_blocks = 2;
  c.decoder_channels = 6;
  c.decoder_blocks = 2;
  c.kernel = 3;
  return c;
}

// Smooth multichannel signal with a per-utterance gain and offset playing the
// role of speaker characteristics.
MatF utterance(int frames, int dims, double gain, double offset, std::uint64_t seed) {
  Rng rng(seed);
  MatF x(frames, dims);
  for (int d = 0; d < dims; ++d) {
    const double f = 0.05 + 0.03 * d + 0.01 * rng.normal();
    const double ph = rng.normal();
    for (int t = 0; t < frames; ++t) x(t, d) = static_cast<float>(gain * std::sin(f * t + ph) + offset * (d + 1) / dims);
  }
  return x;
}

}  // namespace

TEST(Sdn, OutputShapes) {
  Rng rng(1);
  Sdn<float> sdn(small_config());
  sdn.init(rng);
  const MatF x = utterance(40, 6, 1.0, 0.0, 2);
  EXPECT_EQ(sdn.encode_speaker(x).vector.rows(), 1);
  EXPECT_EQ(sdn.encode_speaker(x).dim(), 5);
  EXPECT_EQ(sdn.encode_content(x).frames(), 40);
  EXPECT_EQ(sdn.encode_content(x).data.cols(), 4);
  const MatF y = sdn.reconstruct(x);
  EXPECT_EQ(y.rows(), 40);
  EXPECT_EQ(y.cols(), 6);
  EXPECT_TRUE(y.allFinite());
}

TEST(Sdn, SpeakerEmbeddingIsOneVectorPerUtterance) {
  Rng rng(3);
  Sdn<float> sdn(small_config());
  sdn.init(rng);
  const MatF a = utterance(30, 6, 1.0, 0.0, 4);
  const MatF b = utterance(90, 6, 1.0, 0.0, 4);
  EXPECT_EQ(sdn.encode_speaker(a).vector.size(), sdn.encode_speaker(b).vector.size());
}

TEST(Sdn, ContentChannelsAreInstanceNormalized) {
  Rng rng(5);
  Sdn<double> sdn(small_config());
  sdn.init(rng);
  const MatD x = utterance(60, 6, 2.0, 1.0, 6).cast<double>();
  const MatD c = sdn.encode_content(x).data;
  for (Eigen::Index j = 0; j < c.cols(); ++j) EXPECT_NEAR(c.col(j).mean(), 0.0, 1e-9);
}

TEST(Sdn, LinearContentIgnoresGlobalGainAndChannelOffsets) {
  auto cfg = small_config();
  cfg.linear = true;
  Rng rng(7);
  Sdn<double> sdn(cfg);
  sdn.init(rng);
  const MatD x = utterance(50, 6, 1.0, 0.0, 8).cast<double>();
  RowVec<double> offset(6);
  offset << 0.3, -1.0, 2.0, 0.0, 5.0, -0.5;
  const MatD moved = (3.0 * x).rowwise() + offset;
  const MatD a = sdn.encode_content(x).data, b = sdn.encode_content(moved).data;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_GT((sdn.encode_speaker(x).vector - sdn.encode_speaker(moved).vector).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Sdn, DecoderDependsOnBothEmbeddings) {
  Rng rng(9);
  Sdn<double> sdn(small_config());
  sdn.init(rng);
  const MatD x = utterance(40, 6, 1.0, 0.0, 10).cast<double>();
  const MatD y = utterance(40, 6, 2.5, 1.5, 11).cast<double>();
  const auto sx = sdn.encode_speaker(x), sy = sdn.encode_speaker(y);
  const auto cx = sdn.encode_content(x), cy = sdn.encode_content(y);
  const MatD base = sdn.decode(sx, cx);
  EXPECT_GT((base - sdn.decode(sy, cx)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GT((base - sdn.decode(sx, cy)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sdn, InputValidation) {
  Rng rng(1);
  Sdn<float> sdn(small_config());
  sdn.init(rng);
  EXPECT_THROW(sdn.reconstruct(MatF::Zero(2, 6)), DataError);
  EXPECT_NO_THROW(sdn.reconstruct(MatF::Zero(3, 6)));
  EXPECT_THROW(sdn.reconstruct(MatF::Zero(20, 5)), ShapeError);
  auto bad = small_config();
  bad.kernel = 4;
  EXPECT_THROW(Sdn<float>{bad}, ConfigError);
  bad = small_config();
  bad.speaker_channels.clear();
  EXPECT_THROW(Sdn<float>{bad}, ConfigError);
}

TEST(Sdn, L1Loss) {
  MatD x(2, 2), y(2, 2);
  x << 1, 2, 3, 4;
  y << 1, 3, 1, 4;
  EXPECT_DOUBLE_EQ(sdn_loss(x, y), 0.75);
  const MatD g = sdn_loss_grad(x, y);
  EXPECT_DOUBLE_EQ(g(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(g(1, 0), -0.25);
}

TEST(Sdn, GradientsMatchFiniteDifferences) {
  EXPECT_TRUE(gradcheck_sdn().passed());
}

TEST(SdnTraining, ReconstructionLossDecreases) {
  std::vector<AcousticUtterance> train, val;
  for (int i = 0; i < 12; ++i) {
    const double gain = i % 2 ? 1.0 : 2.0, off = i % 2 ? -1.0 : 1.0;
    auto& dst = i < 10 ? train : val;
    dst.push_back({"u" + std::to_string(i), i % 2 ? "A" : "B", utterance(40, 6, gain, off, 100 + static_cast<std::uint64_t>(i))});
  }
  SdnTrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.batch_size = 4;
  tc.iterations = 200;
  tc.eval_every = 50;
  tc.early_stop_patience = 0;
  tc.seed = 1;
  std::vector<SdnMetricsRow> rows;
  const auto r = pretrain_sdn(train, val, small_config(), tc, [&](const SdnMetricsRow& row) { rows.push_back(row); });
  EXPECT_EQ(rows.size(), 4u);
  EXPECT_LT(r.final_loss, 0.75 * r.initial_loss);
  EXPECT_LT(rows.back().train_loss, 0.75 * rows.front().train_loss);
  EXPECT_DOUBLE_EQ(sdn_mean_loss(r.model, val), r.final_loss);
}

TEST(SdnTraining, DeterministicForFixedSeed) {
  std::vector<AcousticUtterance> train;
  for (int i = 0; i < 4; ++i) train.push_back({"u" + std::to_string(i), "A", utterance(20, 6, 1.0, 0.0, 7 + static_cast<std::uint64_t>(i))});
  SdnTrainConfig tc;
  tc.iterations = 20;
  tc.eval_every = 10;
  tc.batch_size = 2;
  tc.seed = 4;
  const auto a = pretrain_sdn(train, {}, small_config(), tc);
  const auto b = pretrain_sdn(train, {}, small_config(), tc);
  EXPECT_EQ(a.final_loss, b.final_loss);
}

TEST(SdnTraining, RejectsTooShortUtterances) {
  std::vector<AcousticUtterance> train{{"short", "A", MatF::Zero(2, 6)}};
  SdnTrainConfig tc;
  tc.iterations = 1;
  EXPECT_THROW(pretrain_sdn(train, {}, small_config(), tc), DataError);
  EXPECT_THROW(pretrain_sdn({}, {}, small_config(), tc), DataError);
}
