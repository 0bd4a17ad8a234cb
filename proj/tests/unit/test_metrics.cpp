#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>

#include "safn/core/log.hpp"
#include "safn/eval/metrics.hpp"
#include "safn/eval/plot.hpp"
#include "safn/eval/report.hpp"

using namespace safn;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MetricsReport sample_report(const std::string& scenario, const std::string& variant, double base) {
  MetricsReport r;
  r.scenario = scenario;
  r.variant = variant;
  r.dataset = "synthetic";
  r.seed = 3;
  r.n_test_utterances = 46;
  for (int c = 0; c < 6; ++c) {
    r.rmse[c] = base + 0.01 * c;
    r.cc[c] = 0.9 - 0.01 * c;
  }
  r.mean_rmse = base + 0.025;
  r.mean_cc = 0.875;
  return r;
}

}  // namespace

TEST(Rmse, HandComputed) {
  EXPECT_DOUBLE_EQ(rmse_channel(vec({1, 2, 3}), vec({1, 2, 3})), 0.0);
  EXPECT_DOUBLE_EQ(rmse_channel(vec({0, 0, 0, 0}), vec({1, -1, 1, -1})), 1.0);
  EXPECT_DOUBLE_EQ(rmse_channel(vec({3, 0}), vec({0, 4})), std::sqrt(12.5));
  EXPECT_THROW(rmse_channel(vec({1}), vec({1, 2})), ShapeError);
  EXPECT_THROW(rmse_channel(vec({}), vec({})), DataError);
}

TEST(Cc, PerfectAndAntiCorrelation) {
  const auto t = vec({0.5, 1.5, -2.0, 4.0, 3.0});
  EXPECT_NEAR(cc_channel(t, t), 1.0, 1e-15);
  EXPECT_NEAR(cc_channel(-t, t), -1.0, 1e-15);
  const Eigen::VectorXd affine = (3.0 * t).array() + 7.0;
  EXPECT_NEAR(cc_channel(affine, t), 1.0, 1e-15);
}

TEST(Cc, HandComputed) {
  EXPECT_NEAR(cc_channel(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(cc_channel(vec({2, 2, 2}), vec({1, 2, 3})), 0.0);
}

TEST(Cc, ConstantTruthIsUndefined) {
  EXPECT_THROW(cc_channel(vec({1, 2, 3}), vec({5, 5, 5})), UndefinedCorrelation);
  EXPECT_THROW(cc_channel(vec({1}), vec({1})), DataError);
}

TEST(Aggregate, MeanOfSixChannels) {
  EXPECT_DOUBLE_EQ(aggregate({1, 2, 3, 4, 5, 6}), 3.5);
  EXPECT_NEAR(aggregate({1.419, 1.530, 1.601, 1.552, 1.559, 1.443}), 1.517, 0.0005);
  EXPECT_NEAR(aggregate({2.184, 3.077, 2.938, 2.621, 2.412, 3.096}), 2.721, 0.0005);
  EXPECT_THROW(aggregate({1, 2, 3}), DataError);
  EXPECT_THROW(aggregate({1, 2, 3, 4, 5, std::nan("")}), NumericError);
}

TEST(Accumulator, FramePoolingMatchesStackedComputation) {
  MatF p1 = MatF::Random(20, 6), t1 = MatF::Random(20, 6), p2 = MatF::Random(7, 6), t2 = MatF::Random(7, 6);
  MetricsAccumulator acc;
  acc.add(p1, t1);
  acc.add(p2, t2);
  const auto r = acc.finalize();
  MatD P(27, 6), Y(27, 6);
  P << p1.cast<double>(), p2.cast<double>();
  Y << t1.cast<double>(), t2.cast<double>();
  for (int c = 0; c < 6; ++c) {
    EXPECT_NEAR(r.rmse[c], rmse_channel(P.col(c), Y.col(c)), 1e-12);
    ASSERT_TRUE(r.cc[c].has_value());
    EXPECT_NEAR(*r.cc[c], cc_channel(P.col(c), Y.col(c)), 1e-12);
  }
  EXPECT_EQ(r.n_test_utterances, 2u);
  double s = 0;
  for (double v : r.rmse) s += v;
  EXPECT_NEAR(r.mean_rmse, s / 6, 1e-12);
}

TEST(Accumulator, UtterancePoolingAveragesPerUtterance) {
  MatF p1 = MatF::Random(10, 6), t1 = MatF::Random(10, 6), p2 = MatF::Random(30, 6), t2 = MatF::Random(30, 6);
  MetricsAccumulator acc(Pooling::utterances);
  acc.add(p1, t1);
  acc.add(p2, t2);
  const auto r = acc.finalize();
  const double r0 = 0.5 * (rmse_channel(p1.col(0).cast<double>(), t1.col(0).cast<double>()) +
                           rmse_channel(p2.col(0).cast<double>(), t2.col(0).cast<double>()));
  EXPECT_NEAR(r.rmse[0], r0, 1e-12);
}

TEST(Accumulator, ConstantTruthChannelIsOmittedFromMeanCc) {
  ScopedLogSink quiet([](LogLevel, const std::string&) {});
  MatF p = MatF::Random(15, 6), t = MatF::Random(15, 6);
  t.col(2).setConstant(1.0f);
  MetricsAccumulator acc;
  acc.add(p, t);
  const auto r = acc.finalize();
  EXPECT_FALSE(r.cc[2].has_value());
  double s = 0;
  for (int c : {0, 1, 3, 4, 5}) s += *r.cc[c];
  EXPECT_NEAR(r.mean_cc, s / 5, 1e-12);
}

TEST(Accumulator, RejectsBadInput) {
  MetricsAccumulator acc;
  EXPECT_THROW(acc.finalize(), DataError);
  EXPECT_THROW(acc.add(MatF::Zero(3, 6), MatF::Zero(4, 6)), ShapeError);
  EXPECT_THROW(acc.add(MatF::Zero(3, 5), MatF::Zero(3, 5)), ShapeError);
}

TEST(Report, CsvRoundTrip) {
  const std::vector<MetricsReport> rs{sample_report("S1", "SOTA", 1.0), sample_report("S4", "SAFN", 2.5)};
  const auto back = parse_report_csv(report_csv(rs));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(back[i].scenario, rs[i].scenario);
    EXPECT_EQ(back[i].variant, rs[i].variant);
    EXPECT_EQ(back[i].dataset, rs[i].dataset);
    EXPECT_EQ(back[i].seed, rs[i].seed);
    EXPECT_EQ(back[i].n_test_utterances, rs[i].n_test_utterances);
    for (int c = 0; c < 6; ++c) EXPECT_NEAR(back[i].rmse[c], rs[i].rmse[c], 5e-7);
    EXPECT_NEAR(back[i].mean_rmse, rs[i].mean_rmse, 5e-7);
    EXPECT_NEAR(back[i].mean_cc, rs[i].mean_cc, 5e-7);
  }
  EXPECT_THROW(parse_report_csv("a,b\n"), DataError);
  EXPECT_THROW(parse_report_csv("scenario,variant\nS1,SOTA,x\n"), DataError);
}

TEST(Report, TableHasOneRowPerScenarioVariant) {
  std::vector<MetricsReport> rs;
  for (const char* s : {"S1", "S2", "S3", "S4"})
    for (const char* v : {"SOTA", "SAFN-S", "SAFN-A", "SAFN-S-A", "SAFN"}) rs.push_back(sample_report(s, v, 1.2));
  const auto table = report_table(rs);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 21);
  EXPECT_NE(table.find("t1x"), std::string::npos);
  EXPECT_NE(table.find("SAFN-S-A"), std::string::npos);
  EXPECT_NE(table.find("1.225"), std::string::npos);
  EXPECT_THROW(report_table({}), DataError);
}

TEST(Plot, WritesTrajectoryAndBarCharts) {
  const auto dir = std::filesystem::temp_directory_path() / ("safn-plot-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto r = sample_report("S2", "SAFN", 1.5);
  const auto paths = plot_outputs(r, {"u1", "u2"}, {MatF::Random(30, 6), MatF::Random(20, 6)},
                                  {MatF::Random(30, 6), MatF::Random(20, 6)}, dir);
  ASSERT_EQ(paths.size(), 3u);
  for (const auto& p : paths) {
    ASSERT_TRUE(std::filesystem::exists(p)) << p;
    EXPECT_EQ(read_file(p).rfind("<svg", 0), 0u) << p;
  }
  EXPECT_NE(cc_bar_svg({r, sample_report("S2", "SOTA", 1.7)}).find("SOTA"), std::string::npos);
  EXPECT_THROW(plot_outputs(r, {}, {}, {}, dir), DataError);
  std::filesystem::remove_all(dir);
}
