#include <gtest/gtest.h>

#include <cmath>

#include "safn/nn/adam.hpp"
#include "safn/nn/checkpoint.hpp"
#include "safn/nn/gradcheck.hpp"
#include "safn/nn/layers.hpp"
#include "safn/nn/lstm.hpp"
#include "safn/nn/norm.hpp"
#include "safn/training/gradcheck_suite.hpp"

using namespace safn;
using namespace safn::nn;

TEST(InstanceNorm, HandEvaluatedChannel) {
  MatD x(3, 1);
  x << 1, 2, 3;
  const MatD y = instance_norm(x, 0.0);
  EXPECT_NEAR(y(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(y(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(y(2, 0), 1.224744871391589, 1e-12);
}

TEST(InstanceNorm, ConstantChannelMapsToZero) {
  const MatD x = MatD::Constant(3, 2, 5.0);
  const MatD y = instance_norm(x, 1e-5);
  EXPECT_LT(y.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(channel_stats(x, 1e-5).sigma.minCoeff(), std::sqrt(1e-5));
}

TEST(InstanceNorm, ChannelsAreIndependent) {
  MatD x = MatD::Random(10, 3);
  x.col(2) *= 100.0;
  const MatD y = instance_norm(x, 1e-5);
  const MatD y0 = instance_norm(MatD(x.col(0)), 1e-5);
  EXPECT_LT((y.col(0) - y0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Adain, MatchedStatsRestoreInput) {
  const MatD x = (MatD::Random(30, 4).array() * 3.0 + 1.5).matrix();
  const auto s = channel_stats(x, 1e-5);
  EXPECT_LT((adain(x, s.sigma, s.mean, 1e-5) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Adain, AppliesStyleStatistics) {
  const MatD x = MatD::Random(200, 2);
  MatD gamma(1, 2), beta(1, 2);
  gamma << 2.0, 0.5;
  beta << -1.0, 3.0;
  const MatD y = adain(x, gamma, beta, 0.0);
  const MatD mu = y.colwise().mean();
  EXPECT_NEAR(mu(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(mu(0, 1), 3.0, 1e-12);
  EXPECT_NEAR(std::sqrt((y.col(0).array() + 1.0).square().mean()), 2.0, 1e-12);
  const MatD g3 = MatD::Ones(1, 3), b3 = MatD::Zero(1, 3);
  EXPECT_THROW(adain(x, g3, b3), ShapeError);
}

TEST(Lstm, HandComputedTwoSteps) {
  LstmCell<double> cell(1, 1, false);
  cell.w_x().value << 0.5, -0.5, 1.0, 2.0;
  cell.w_h().value << 0.1, 0.2, -0.3, 0.4;
  cell.b_x().value << 0, 1, 0, 0;
  cell.b_h().value.setZero();
  MatD x(2, 1);
  x << 1.0, -2.0;
  typename LstmCell<double>::Cache cache;
  const MatD h = cell.forward(x, &cache);
  EXPECT_NEAR(cache.cell(0, 0), 0.47406138896346633, 1e-14);
  EXPECT_NEAR(h(0, 0), 0.3888498844368542, 1e-14);
  EXPECT_NEAR(cache.cell(1, 0), 0.15256521741710266, 1e-14);
  EXPECT_NEAR(h(1, 0), 0.003171621693974922, 1e-14);
}

TEST(Lstm, ReverseCellReadsTimeBackwards) {
  Rng rng(3);
  LstmCell<double> fwd(2, 3, false), bwd(2, 3, true);
  fwd.init(rng);
  copy_values<double, double>({{"a", &bwd.w_x()}, {"b", &bwd.b_x()}, {"c", &bwd.w_h()}, {"d", &bwd.b_h()}},
                              {{"a", &fwd.w_x()}, {"b", &fwd.b_x()}, {"c", &fwd.w_h()}, {"d", &fwd.b_h()}});
  const MatD x = MatD::Random(7, 2);
  const MatD reversed = x.colwise().reverse();
  EXPECT_LT((bwd.forward(x) - fwd.forward(reversed).colwise().reverse()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Blstm, OutputIsDirectionAverage) {
  Rng rng(1);
  Blstm<double> b(3, 4);
  b.init(rng);
  const MatD x = MatD::Random(9, 3);
  typename Blstm<double>::Taps taps;
  const MatD out = b.forward(x, nullptr, &taps);
  EXPECT_EQ((out - 0.5 * (taps.forward_out + taps.backward_out)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lstm, ForgetGateBiasStartsAtOne) {
  Rng rng(2);
  LstmCell<float> c(3, 2, false);
  c.init(rng);
  EXPECT_EQ(c.b_x().value(0, 2), 1.0f);
  EXPECT_EQ(c.b_x().value(0, 3), 1.0f);
  EXPECT_EQ(c.b_x().value(0, 0), 0.0f);
}

TEST(Conv1d, SameLengthWithReplicatedEdges) {
  Conv1d<double> conv(1, 1, 3);
  conv.weight().value << 1, 1, 1;
  MatD x(4, 1);
  x << 1, 2, 3, 4;
  const MatD y = conv.forward(x);
  ASSERT_EQ(y.rows(), 4);
  EXPECT_DOUBLE_EQ(y(0, 0), 1 + 1 + 2);
  EXPECT_DOUBLE_EQ(y(1, 0), 6);
  EXPECT_DOUBLE_EQ(y(3, 0), 3 + 4 + 4);
  EXPECT_THROW(Conv1d<double>(1, 1, 4), ConfigError);
  EXPECT_THROW(conv.forward(MatD::Zero(4, 2)), ShapeError);
}

TEST(Dense, AffineMap) {
  Dense<double> d(2, 1);
  d.weight().value << 2, -1;
  d.bias().value << 0.5;
  MatD x(1, 2);
  x << 3, 4;
  EXPECT_DOUBLE_EQ(d.forward(x)(0, 0), 2.5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Param<double> p(1, 2);
  p.value << 1.0, -1.0;
  p.grad << 0.3, -7.0;
  Adam<double> opt({0.01, 0.9, 0.999, 1e-8});
  opt.step({{"p", &p}});
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value(0, 1), -1.0 + 0.01, 1e-9);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MinimizesQuadratic) {
  Param<double> p(1, 1);
  p.value << 5.0;
  Adam<double> opt({0.1, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 500; ++i) {
    p.grad = 2.0 * p.value;
    opt.step({{"p", &p}});
  }
  EXPECT_NEAR(p.value(0, 0), 0.0, 1e-2);
}

TEST(Params, ClipGradNorm) {
  Param<double> a(1, 2), b(1, 1);
  a.grad << 3, 0;
  b.grad << 4;
  const ParamList<double> ps{{"a", &a}, {"b", &b}};
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(grad_norm(ps), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 10.0), 1.0);
}

TEST(Checkpoint, RoundTripWithOptimizerState) {
  Param<float> w(2, 3);
  w.value = MatF::Random(2, 3);
  w.grad = MatF::Random(2, 3);
  const ParamList<float> ps{{"layer.w", &w}};
  Adam<float> opt;
  opt.step(ps);
  Checkpoint c;
  c.config_hash = "abc";
  c.step = 12;
  c.seed = 99;
  c.meta["k"] = "v w";
  add_params(c, ps);
  add_adam_state(c, opt);
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(c));
  EXPECT_EQ(back.config_hash, "abc");
  EXPECT_EQ(back.step, 12);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.meta.at("k"), "v w");

  Param<float> w2(2, 3);
  load_params(back, {{"layer.w", &w2}});
  EXPECT_EQ(w2.value, w.value);
  Adam<float> opt2;
  load_adam_state(back, opt2, ps);
  EXPECT_EQ(opt2.steps(), 1);
  EXPECT_EQ(opt2.state().at("layer.w").v, opt.state().at("layer.w").v);

  EXPECT_THROW(back.require_hash("other"), ConfigHashMismatch);
  Param<float> wrong(3, 3);
  EXPECT_THROW(load_params(back, {{"layer.w", &wrong}}), ShapeError);
  EXPECT_THROW(load_params(back, {{"missing", &wrong}}), DataError);
}

TEST(GradCheck, DetectsWrongBackward) {
  Param<double> p(1, 2);
  p.value << 0.3, -0.7;
  const ParamList<double> ps{{"p", &p}};
  auto loss = [&] { return p.value.array().cube().sum(); };
  auto right = [&] { p.grad = 3.0 * p.value.array().square().matrix(); };
  auto wrong = [&] { p.grad = 2.9 * p.value.array().square().matrix(); };
  EXPECT_TRUE(grad_check(ps, loss, right).passed());
  EXPECT_FALSE(grad_check(ps, loss, wrong).passed());
}

TEST(GradCheck, EveryLayerPasses) {
  const auto suite = gradcheck_suite();
  ASSERT_EQ(suite.size(), 11u);
  for (const auto& r : suite) EXPECT_TRUE(r.report.passed()) << r.name << " " << r.report.max_rel_error;
}
