#pragma once

// Frame-major layers: inputs are T x C matrices (rows = frames). Each layer's
// forward fills a caller-owned cache that its backward consumes; backward
// accumulates into the parameter gradients and returns the input gradient.

#include <algorithm>
#include <string>
#include <vector>

#include "safn/nn/param.hpp"

namespace safn::nn {

template <class T>
class Dense {
 public:
  Dense() = default;
  Dense(Eigen::Index in, Eigen::Index out) : weight_(in, out), bias_(1, out) {}

  void init(Rng& rng) {
    xavier_uniform(weight_, in_dim(), out_dim(), rng);
    bias_.value.setZero();
  }

  Eigen::Index in_dim() const { return weight_.value.rows(); }
  Eigen::Index out_dim() const { return weight_.value.cols(); }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight_});
    out.push_back({prefix + ".bias", &bias_});
  }

  struct Cache {
    Mat<T> x;
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    require_shape(x.cols() == in_dim(), "dense: expected " + std::to_string(in_dim()) + " input columns, got " +
                                            std::to_string(x.cols()));
    if (cache) cache->x = x;
    Mat<T> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy, const Cache& cache) {
    weight_.grad.noalias() += cache.x.transpose() * dy;
    bias_.grad += dy.colwise().sum();
    return dy * weight_.value.transpose();
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  const Param<T>& weight() const { return weight_; }
  const Param<T>& bias() const { return bias_; }

 private:
  Param<T> weight_;  // in x out
  Param<T> bias_;    // 1 x out
};

/// 1-D convolution over time, odd kernel, "same" output length. Frames
/// outside the sequence replicate the nearest edge frame.
template <class T>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Eigen::Index in, Eigen::Index out, int kernel) : in_(in), kernel_(kernel), weight_(kernel * in, out), bias_(1, out) {
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv1d kernel size must be odd");
  }

  void init(Rng& rng) {
    xavier_uniform(weight_, in_ * kernel_, out_dim(), rng);
    bias_.value.setZero();
  }

  Eigen::Index in_dim() const { return in_; }
  Eigen::Index out_dim() const { return weight_.value.cols(); }
  int kernel() const { return kernel_; }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight_});
    out.push_back({prefix + ".bias", &bias_});
  }

  struct Cache {
    Mat<T> columns;  // T x (kernel * in)
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    require_shape(x.cols() == in_, "conv1d: expected " + std::to_string(in_) + " input channels, got " +
                                       std::to_string(x.cols()));
    Mat<T> cols = im2col(x);
    Mat<T> y = cols * weight_.value;
    y.rowwise() += bias_.value.row(0);
    if (cache) cache->columns = std::move(cols);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy, const Cache& cache) {
    weight_.grad.noalias() += cache.columns.transpose() * dy;
    bias_.grad += dy.colwise().sum();
    const Mat<T> dcols = dy * weight_.value.transpose();
    const Eigen::Index frames = dy.rows();
    Mat<T> dx = Mat<T>::Zero(frames, in_);
    const int half = kernel_ / 2;
    for (Eigen::Index t = 0; t < frames; ++t)
      for (int k = 0; k < kernel_; ++k) {
        const Eigen::Index src = std::clamp<Eigen::Index>(t + k - half, 0, frames - 1);
        dx.row(src) += dcols.block(t, k * in_, 1, in_);
      }
    return dx;
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  Mat<T> im2col(const Mat<T>& x) const {
    const Eigen::Index frames = x.rows();
    Mat<T> cols(frames, kernel_ * in_);
    const int half = kernel_ / 2;
    for (Eigen::Index t = 0; t < frames; ++t)
      for (int k = 0; k < kernel_; ++k) {
        const Eigen::Index src = std::clamp<Eigen::Index>(t + k - half, 0, frames - 1);
        cols.block(t, k * in_, 1, in_) = x.row(src);
      }
    return cols;
  }

  Eigen::Index in_ = 0;
  int kernel_ = 1;
  Param<T> weight_;  // (kernel * in) x out, tap-major
  Param<T> bias_;
};

template <class T>
Mat<T> relu(const Mat<T>& x) {
  return x.cwiseMax(T(0));
}

/// Gradient of relu given its output.
template <class T>
Mat<T> relu_backward(const Mat<T>& dy, const Mat<T>& y) {
  return (y.array() > T(0)).select(dy.array(), T(0)).matrix();
}

/// Average over frames: T x C -> 1 x C.
template <class T>
Mat<T> mean_pool(const Mat<T>& x) {
  require_shape(x.rows() >= 1, "mean_pool: empty input");
  return x.colwise().mean();
}

template <class T>
Mat<T> mean_pool_backward(const Mat<T>& dy, Eigen::Index frames) {
  return dy.replicate(frames, 1) / static_cast<T>(frames);
}

/// Column-wise concatenation of equal-length sequences.
template <class T>
Mat<T> concat_cols(const std::vector<const Mat<T>*>& parts) {
  require_shape(!parts.empty(), "concat: nothing to concatenate");
  const Eigen::Index rows = parts.front()->rows();
  Eigen::Index cols = 0;
  for (const auto* p : parts) {
    require_shape(p->rows() == rows, "concat: frame counts differ");
    cols += p->cols();
  }
  Mat<T> out(rows, cols);
  Eigen::Index c = 0;
  for (const auto* p : parts) {
    out.middleCols(c, p->cols()) = *p;
    c += p->cols();
  }
  return out;
}

/// Repeats a 1 x C row for every frame.
template <class T>
Mat<T> broadcast_rows(const Mat<T>& row, Eigen::Index frames) {
  return row.replicate(frames, 1);
}

}  // namespace safn::nn
