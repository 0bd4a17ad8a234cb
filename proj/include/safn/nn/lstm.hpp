#pragma once

// LSTM cells and the bidirectional layer whose output is the average of
// the two directions:
//
//   O_t = 1/2 * (O_t^fwd + O_t^bwd)
//
// Gate pre-activations: z_t = x_t W_x + b_x + h_prev W_h + b_h, split into
// input, forget, cell and output blocks (in that order, H columns each).
// The forward cell's h_prev is h_{t-1}; the backward cell's is h_{t+1}.

#include <cmath>

#include "safn/nn/layers.hpp"

namespace safn::nn {

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <class T>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(Eigen::Index input, Eigen::Index hidden, bool reverse)
      : hidden_(hidden), reverse_(reverse), wx_(input, 4 * hidden), bx_(1, 4 * hidden), wh_(hidden, 4 * hidden),
        bh_(1, 4 * hidden) {}

  void init(Rng& rng) {
    xavier_uniform(wx_, input_dim(), 4 * hidden_, rng);
    xavier_uniform(wh_, hidden_, 4 * hidden_, rng);
    bx_.value.setZero();
    bh_.value.setZero();
    bx_.value.middleCols(hidden_, hidden_).setOnes();  // forget gate bias
  }

  Eigen::Index input_dim() const { return wx_.value.rows(); }
  Eigen::Index hidden() const { return hidden_; }
  bool reverse() const { return reverse_; }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".w_x", &wx_});
    out.push_back({prefix + ".b_x", &bx_});
    out.push_back({prefix + ".w_h", &wh_});
    out.push_back({prefix + ".b_h", &bh_});
  }

  struct Cache {
    Mat<T> x;
    Mat<T> gates;   // T x 4H, activated
    Mat<T> cell;    // T x H
    Mat<T> tanh_c;  // T x H
    Mat<T> h;       // T x H
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    require_shape(x.cols() == input_dim(), "lstm: expected " + std::to_string(input_dim()) + " input columns, got " +
                                               std::to_string(x.cols()));
    const Eigen::Index frames = x.rows();
    const Eigen::Index H = hidden_;
    Mat<T> z_in = x * wx_.value;
    z_in.rowwise() += bx_.value.row(0) + bh_.value.row(0);
    Mat<T> gates(frames, 4 * H), cell(frames, H), tanh_c(frames, H), h(frames, H);
    RowVec<T> h_prev = RowVec<T>::Zero(H), c_prev = RowVec<T>::Zero(H);
    RowVec<T> z(4 * H);
    for (Eigen::Index step = 0; step < frames; ++step) {
      const Eigen::Index t = reverse_ ? frames - 1 - step : step;
      z.noalias() = z_in.row(t) + h_prev * wh_.value;
      auto g = gates.row(t);
      for (Eigen::Index k = 0; k < H; ++k) {
        g(k) = sigmoid(z(k));
        g(H + k) = sigmoid(z(H + k));
        g(2 * H + k) = std::tanh(z(2 * H + k));
        g(3 * H + k) = sigmoid(z(3 * H + k));
        const T c = g(H + k) * c_prev(k) + g(k) * g(2 * H + k);
        const T tc = std::tanh(c);
        cell(t, k) = c;
        tanh_c(t, k) = tc;
        h(t, k) = g(3 * H + k) * tc;
      }
      h_prev = h.row(t);
      c_prev = cell.row(t);
    }
    if (cache) {
      cache->x = x;
      cache->gates = gates;
      cache->cell = cell;
      cache->tanh_c = tanh_c;
      cache->h = h;
    }
    return h;
  }

  Mat<T> backward(const Mat<T>& dh_out, const Cache& cache) {
    const Eigen::Index frames = dh_out.rows();
    const Eigen::Index H = hidden_;
    Mat<T> dz(frames, 4 * H);
    Mat<T> h_prev_all = Mat<T>::Zero(frames, H);
    RowVec<T> dh_next = RowVec<T>::Zero(H), dc_next = RowVec<T>::Zero(H);
    for (Eigen::Index step = frames - 1; step >= 0; --step) {
      const Eigen::Index t = reverse_ ? frames - 1 - step : step;
      const Eigen::Index prev = reverse_ ? t + 1 : t - 1;
      const bool has_prev = step > 0;
      const auto g = cache.gates.row(t);
      for (Eigen::Index k = 0; k < H; ++k) {
        const T dh = dh_out(t, k) + dh_next(k);
        const T i = g(k), f = g(H + k), gg = g(2 * H + k), o = g(3 * H + k);
        const T tc = cache.tanh_c(t, k);
        const T c_prev = has_prev ? cache.cell(prev, k) : T(0);
        const T dc = dc_next(k) + dh * o * (T(1) - tc * tc);
        dz(t, k) = dc * gg * i * (T(1) - i);
        dz(t, H + k) = dc * c_prev * f * (T(1) - f);
        dz(t, 2 * H + k) = dc * i * (T(1) - gg * gg);
        dz(t, 3 * H + k) = dh * tc * o * (T(1) - o);
        dc_next(k) = dc * f;
      }
      dh_next.noalias() = dz.row(t) * wh_.value.transpose();
      if (has_prev) h_prev_all.row(t) = cache.h.row(prev);
    }
    wh_.grad.noalias() += h_prev_all.transpose() * dz;
    wx_.grad.noalias() += cache.x.transpose() * dz;
    const Mat<T> dbias = dz.colwise().sum();
    bx_.grad += dbias;
    bh_.grad += dbias;
    return dz * wx_.value.transpose();
  }

  Param<T>& w_x() { return wx_; }
  Param<T>& b_x() { return bx_; }
  Param<T>& w_h() { return wh_; }
  Param<T>& b_h() { return bh_; }

 private:
  Eigen::Index hidden_ = 0;
  bool reverse_ = false;
  Param<T> wx_, bx_, wh_, bh_;
};

/// Bidirectional LSTM with averaged (not concatenated) direction outputs.
template <class T>
class Blstm {
 public:
  Blstm() = default;
  Blstm(Eigen::Index input, Eigen::Index hidden) : forward_(input, hidden, false), backward_(input, hidden, true) {}

  void init(Rng& rng) {
    forward_.init(rng);
    backward_.init(rng);
  }

  Eigen::Index input_dim() const { return forward_.input_dim(); }
  Eigen::Index hidden() const { return forward_.hidden(); }

  void collect(ParamList<T>& out, const std::string& prefix) {
    forward_.collect(out, prefix + ".fwd");
    backward_.collect(out, prefix + ".bwd");
  }

  struct Cache {
    typename LstmCell<T>::Cache fwd, bwd;
  };

  /// Per-direction outputs before averaging.
  struct Taps {
    Mat<T> forward_out;
    Mat<T> backward_out;
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr, Taps* taps = nullptr) const {
    typename LstmCell<T>::Cache* fc = cache ? &cache->fwd : nullptr;
    typename LstmCell<T>::Cache* bc = cache ? &cache->bwd : nullptr;
    Mat<T> hf = forward_.forward(x, fc);
    Mat<T> hb = backward_.forward(x, bc);
    Mat<T> out = T(0.5) * (hf + hb);
    if (taps) {
      taps->forward_out = std::move(hf);
      taps->backward_out = std::move(hb);
    }
    return out;
  }

  Mat<T> backward(const Mat<T>& dy, const Cache& cache) {
    const Mat<T> half = T(0.5) * dy;
    Mat<T> dx = forward_.backward(half, cache.fwd);
    dx += backward_.backward(half, cache.bwd);
    return dx;
  }

  LstmCell<T>& forward_cell() { return forward_; }
  LstmCell<T>& backward_cell() { return backward_; }

 private:
  LstmCell<T> forward_, backward_;
};

/// Stack of BLSTM layers followed by two affine layers (ReLU between them).
/// The regression head has no output activation.
template <class T>
class BlstmRegressor {
 public:
  BlstmRegressor() = default;
  BlstmRegressor(Eigen::Index input, Eigen::Index hidden, int layers, Eigen::Index fc_hidden, Eigen::Index output) {
    Eigen::Index in = input;
    for (int l = 0; l < layers; ++l) {
      blstm_.emplace_back(in, hidden);
      in = hidden;
    }
    fc1_ = Dense<T>(in, fc_hidden);
    fc2_ = Dense<T>(fc_hidden, output);
  }

  void init(Rng& rng) {
    for (auto& l : blstm_) l.init(rng);
    fc1_.init(rng);
    fc2_.init(rng);
  }

  Eigen::Index input_dim() const { return blstm_.empty() ? fc1_.in_dim() : blstm_.front().input_dim(); }
  Eigen::Index output_dim() const { return fc2_.out_dim(); }

  void collect(ParamList<T>& out, const std::string& prefix) {
    for (std::size_t l = 0; l < blstm_.size(); ++l) blstm_[l].collect(out, prefix + ".blstm" + std::to_string(l));
    fc1_.collect(out, prefix + ".fc1");
    fc2_.collect(out, prefix + ".fc2");
  }

  struct Cache {
    std::vector<typename Blstm<T>::Cache> blstm;
    typename Dense<T>::Cache fc1, fc2;
    Mat<T> fc1_out;
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    if (cache) cache->blstm.resize(blstm_.size());
    Mat<T> h = x;
    for (std::size_t l = 0; l < blstm_.size(); ++l) h = blstm_[l].forward(h, cache ? &cache->blstm[l] : nullptr);
    Mat<T> a = relu(fc1_.forward(h, cache ? &cache->fc1 : nullptr));
    if (cache) cache->fc1_out = a;
    return fc2_.forward(a, cache ? &cache->fc2 : nullptr);
  }

  Mat<T> backward(const Mat<T>& dy, const Cache& cache) {
    Mat<T> d = fc2_.backward(dy, cache.fc2);
    d = fc1_.backward(relu_backward(d, cache.fc1_out), cache.fc1);
    for (std::size_t l = blstm_.size(); l-- > 0;) d = blstm_[l].backward(d, cache.blstm[l]);
    return d;
  }

  std::vector<Blstm<T>>& layers() { return blstm_; }
  Dense<T>& output_layer() { return fc2_; }
  Dense<T>& hidden_layer() { return fc1_; }

 private:
  std::vector<Blstm<T>> blstm_;
  Dense<T> fc1_, fc2_;
};

}  // namespace safn::nn
