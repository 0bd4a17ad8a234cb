#pragma once

// RMSE (mm) and Pearson CC per tongue channel, pooled over all frames of
// all test utterances unless per-utterance averaging is requested.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safn/core/log.hpp"
#include "safn/core/types.hpp"
#include "safn/corpus/ema.hpp"

namespace safn {

class UndefinedCorrelation : public NumericError {
 public:
  using NumericError::NumericError;
};

using ColumnRef = Eigen::Ref<const Eigen::VectorXd>;

inline double rmse_channel(const ColumnRef& pred, const ColumnRef& truth) {
  if (pred.size() != truth.size())
    throw ShapeError("rmse: length mismatch " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  if (pred.size() == 0) throw DataError("rmse: empty input");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

inline double cc_channel(const ColumnRef& pred, const ColumnRef& truth) {
  if (pred.size() != truth.size())
    throw ShapeError("cc: length mismatch " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  if (pred.size() < 2) throw DataError("cc: needs at least two frames");
  const Eigen::VectorXd p = pred.array() - pred.mean();
  const Eigen::VectorXd t = truth.array() - truth.mean();
  const double tt = t.squaredNorm(), pp = p.squaredNorm();
  if (!(tt > 0)) throw UndefinedCorrelation("cc: truth is constant");
  if (!(pp > 0)) return 0.0;
  return std::clamp(p.dot(t) / std::sqrt(pp * tt), -1.0, 1.0);
}

/// Arithmetic mean of the per-channel values; every channel must be present
/// and finite.
inline double aggregate(const std::vector<double>& values, std::size_t expected = 6) {
  if (values.size() != expected)
    throw DataError("aggregate: expected " + std::to_string(expected) + " channel values, got " +
                    std::to_string(values.size()));
  double s = 0;
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("aggregate: non-finite channel value");
    s += v;
  }
  return s / static_cast<double>(values.size());
}

struct MetricsReport {
  std::string scenario;
  std::string variant;
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t n_test_utterances = 0;
  std::array<double, 6> rmse{};
  std::array<std::optional<double>, 6> cc{};
  double mean_rmse = 0;
  double mean_cc = 0;

  static std::vector<std::string> channel_names() {
    return {"t1x", "t1z", "t2x", "t2z", "t3x", "t3z"};
  }
};

enum class Pooling { frames, utterances };

/// Collects predicted/true tongue trajectories (mm) and reduces them in
/// insertion order.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(Pooling pooling = Pooling::frames) : pooling_(pooling) {}

  void add(const MatF& pred, const MatF& truth) {
    require_shape(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "metrics: prediction/truth shape mismatch");
    require_shape(pred.cols() == 6, "metrics: expected 6 tongue channels");
    preds_.push_back(pred.cast<double>());
    truths_.push_back(truth.cast<double>());
  }

  std::size_t utterances() const { return preds_.size(); }

  MetricsReport finalize() const {
    if (preds_.empty()) throw DataError("metrics: empty prediction set");
    MetricsReport r;
    r.n_test_utterances = preds_.size();
    if (pooling_ == Pooling::frames) {
      const MatD P = stack(preds_), Y = stack(truths_);
      for (int c = 0; c < 6; ++c) {
        r.rmse[c] = rmse_channel(P.col(c), Y.col(c));
        try {
          r.cc[c] = cc_channel(P.col(c), Y.col(c));
        } catch (const UndefinedCorrelation&) {
          log_warn("metrics: channel " + MetricsReport::channel_names()[c] + " has constant truth; CC omitted");
        }
      }
    } else {
      for (int c = 0; c < 6; ++c) {
        double rs = 0, cs = 0;
        int cn = 0;
        for (std::size_t u = 0; u < preds_.size(); ++u) {
          rs += rmse_channel(preds_[u].col(c), truths_[u].col(c));
          try {
            cs += cc_channel(preds_[u].col(c), truths_[u].col(c));
            ++cn;
          } catch (const Error&) {
          }
        }
        r.rmse[c] = rs / static_cast<double>(preds_.size());
        if (cn > 0) r.cc[c] = cs / cn;
      }
    }
    r.mean_rmse = aggregate(std::vector<double>(r.rmse.begin(), r.rmse.end()));
    std::vector<double> ccs;
    for (const auto& c : r.cc)
      if (c) ccs.push_back(*c);
    r.mean_cc = ccs.empty() ? std::nan("") : aggregate(ccs, ccs.size());
    return r;
  }

 private:
  static MatD stack(const std::vector<MatD>& xs) {
    Eigen::Index n = 0;
    for (const auto& x : xs) n += x.rows();
    MatD out(n, 6);
    Eigen::Index r = 0;
    for (const auto& x : xs) {
      out.middleRows(r, x.rows()) = x;
      r += x.rows();
    }
    return out;
  }

  Pooling pooling_;
  std::vector<MatD> preds_, truths_;
};

}  // namespace safn
