#pragma once

// Speech decomposition network: a self-supervised autoencoder that splits
// acoustic features into a fixed-length speaker embedding and a per-frame
// content embedding.
//
//   speaker encoder: conv blocks -> dense block -> average pool over time
//   content encoder: conv blocks, each followed by instance normalization
//   decoder:         conv blocks with AdaIN, (gamma, beta) from a learned
//                    affine map of the speaker embedding; linear projection
//                    back to the input dimension
//
// Trained with an L1 reconstruction loss.

#include <cmath>
#include <string>
#include <vector>

#include "safn/nn/layers.hpp"
#include "safn/nn/norm.hpp"

namespace safn {

struct SdnConfig {
  int input_dim = 39;
  std::vector<int> speaker_channels{64, 128, 128};
  int speaker_dim = 128;
  int content_dim = 64;
  int content_blocks = 3;
  int decoder_channels = 64;
  int decoder_blocks = 3;
  int kernel = 5;
  double eps = 1e-5;
  bool linear = false;  // disables every ReLU; used by invariance tests

  /// Shortest input the encoders accept.
  int min_frames() const { return kernel; }

  void validate() const {
    if (input_dim < 1 || speaker_dim < 1 || content_dim < 1 || decoder_channels < 1)
      throw ConfigError("sdn: dimensions must be positive");
    if (speaker_channels.empty() || content_blocks < 1 || decoder_blocks < 1)
      throw ConfigError("sdn: need at least one block per sub-network");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("sdn: kernel must be odd");
    if (!(eps > 0)) throw ConfigError("sdn: eps must be positive");
  }
};

template <class T>
struct SpeakerEmbedding {
  Mat<T> vector;  // 1 x speaker_dim

  Eigen::Index dim() const { return vector.cols(); }
};

template <class T>
struct ContentEmbedding {
  Mat<T> data;  // frames x content_dim

  Eigen::Index frames() const { return data.rows(); }
};

/// Mean absolute error over all elements.
template <class T>
double sdn_loss(const Mat<T>& x, const Mat<T>& x_hat) {
  require_shape(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(), "sdn_loss: shape mismatch");
  require_shape(x.size() > 0, "sdn_loss: empty input");
  return (x - x_hat).template cast<double>().cwiseAbs().mean();
}

template <class T>
Mat<T> sdn_loss_grad(const Mat<T>& x, const Mat<T>& x_hat) {
  const T scale = T(1) / static_cast<T>(x.size());
  return (x_hat - x).unaryExpr([scale](T d) { return d > 0 ? scale : (d < 0 ? -scale : T(0)); });
}

template <class T>
class Sdn {
 public:
  Sdn() = default;
  explicit Sdn(const SdnConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    int in = cfg.input_dim;
    for (int ch : cfg.speaker_channels) {
      speaker_conv_.emplace_back(in, ch, cfg.kernel);
      in = ch;
    }
    speaker_dense_ = nn::Dense<T>(in, cfg.speaker_dim);
    in = cfg.input_dim;
    for (int b = 0; b < cfg.content_blocks; ++b) {
      content_conv_.emplace_back(in, cfg.content_dim, cfg.kernel);
      in = cfg.content_dim;
    }
    in = cfg.content_dim;
    for (int b = 0; b < cfg.decoder_blocks; ++b) {
      decoder_conv_.emplace_back(in, cfg.decoder_channels, cfg.kernel);
      decoder_style_.emplace_back(cfg.speaker_dim, 2 * cfg.decoder_channels);
      in = cfg.decoder_channels;
    }
    decoder_out_ = nn::Dense<T>(cfg.decoder_channels, cfg.input_dim);
  }

  void init(Rng& rng) {
    for (auto& c : speaker_conv_) c.init(rng);
    speaker_dense_.init(rng);
    for (auto& c : content_conv_) c.init(rng);
    for (auto& c : decoder_conv_) c.init(rng);
    for (auto& s : decoder_style_) {
      s.init(rng);
      // gamma starts at 1, beta at 0
      s.bias().value.leftCols(cfg_.decoder_channels).setOnes();
    }
    decoder_out_.init(rng);
  }

  const SdnConfig& config() const { return cfg_; }

  nn::ParamList<T> params() {
    nn::ParamList<T> out;
    for (std::size_t i = 0; i < speaker_conv_.size(); ++i) speaker_conv_[i].collect(out, "sdn.speaker.conv" + std::to_string(i));
    speaker_dense_.collect(out, "sdn.speaker.dense");
    for (std::size_t i = 0; i < content_conv_.size(); ++i) content_conv_[i].collect(out, "sdn.content.conv" + std::to_string(i));
    for (std::size_t i = 0; i < decoder_conv_.size(); ++i) {
      decoder_conv_[i].collect(out, "sdn.decoder.conv" + std::to_string(i));
      decoder_style_[i].collect(out, "sdn.decoder.style" + std::to_string(i));
    }
    decoder_out_.collect(out, "sdn.decoder.out");
    return out;
  }

  // ---- speaker encoder ----

  struct SpeakerCache {
    std::vector<typename nn::Conv1d<T>::Cache> conv;
    std::vector<Mat<T>> conv_out;  // post-activation
    typename nn::Dense<T>::Cache dense;
    Mat<T> dense_out;   // post-activation
    Mat<T> pool_input;  // frames x speaker_dim
    bool residual = false;
  };

  SpeakerEmbedding<T> encode_speaker(const Mat<T>& x, SpeakerCache* cache = nullptr) const {
    check_input(x);
    if (cache) {
      cache->conv.resize(speaker_conv_.size());
      cache->conv_out.resize(speaker_conv_.size());
    }
    Mat<T> h = x;
    for (std::size_t i = 0; i < speaker_conv_.size(); ++i) {
      h = act(speaker_conv_[i].forward(h, cache ? &cache->conv[i] : nullptr));
      if (cache) cache->conv_out[i] = h;
    }
    Mat<T> z = act(speaker_dense_.forward(h, cache ? &cache->dense : nullptr));
    const bool residual = z.cols() == h.cols();
    Mat<T> pooled_in = residual ? Mat<T>(h + z) : z;
    if (cache) {
      cache->dense_out = z;
      cache->residual = residual;
      cache->pool_input = pooled_in;
    }
    return {nn::mean_pool(pooled_in)};
  }

  void backward_speaker(const Mat<T>& d_embedding, const SpeakerCache& cache) {
    const Eigen::Index frames = cache.pool_input.rows();
    const Mat<T> d_pool = nn::mean_pool_backward(d_embedding, frames);
    Mat<T> dh = speaker_dense_.backward(act_backward(d_pool, cache.dense_out), cache.dense);
    if (cache.residual) dh += d_pool;
    for (std::size_t i = speaker_conv_.size(); i-- > 0;)
      dh = speaker_conv_[i].backward(act_backward(dh, cache.conv_out[i]), cache.conv[i]);
  }

  // ---- content encoder ----

  struct ContentCache {
    std::vector<typename nn::Conv1d<T>::Cache> conv;
    std::vector<Mat<T>> conv_out;
    std::vector<nn::InstanceNormCache<T>> norm;
  };

  ContentEmbedding<T> encode_content(const Mat<T>& x, ContentCache* cache = nullptr) const {
    check_input(x);
    if (cache) {
      cache->conv.resize(content_conv_.size());
      cache->conv_out.resize(content_conv_.size());
      cache->norm.resize(content_conv_.size());
    }
    Mat<T> h = x;
    for (std::size_t i = 0; i < content_conv_.size(); ++i) {
      Mat<T> a = act(content_conv_[i].forward(h, cache ? &cache->conv[i] : nullptr));
      h = nn::instance_norm(a, cfg_.eps, cache ? &cache->norm[i] : nullptr);
      if (cache) cache->conv_out[i] = std::move(a);
    }
    return {std::move(h)};
  }

  void backward_content(const Mat<T>& d_content, const ContentCache& cache) {
    Mat<T> dh = d_content;
    for (std::size_t i = content_conv_.size(); i-- > 0;) {
      dh = nn::instance_norm_backward(dh, cache.norm[i]);
      dh = content_conv_[i].backward(act_backward(dh, cache.conv_out[i]), cache.conv[i]);
    }
  }

  // ---- decoder ----

  struct DecoderCache {
    std::vector<typename nn::Conv1d<T>::Cache> conv;
    std::vector<Mat<T>> conv_out;
    std::vector<typename nn::Dense<T>::Cache> style;
    std::vector<Mat<T>> gamma, beta;  // style actually applied per block
    std::vector<nn::AdainCache<T>> adain;
    typename nn::Dense<T>::Cache out;
  };

  /// (gamma, beta) for decoder block `block` from a speaker embedding.
  std::pair<Mat<T>, Mat<T>> style_for(const SpeakerEmbedding<T>& s, std::size_t block,
                                      typename nn::Dense<T>::Cache* cache = nullptr) const {
    const Mat<T> gb = decoder_style_.at(block).forward(s.vector, cache);
    const Eigen::Index C = cfg_.decoder_channels;
    return {gb.leftCols(C), gb.rightCols(C)};
  }

  Mat<T> decode(const SpeakerEmbedding<T>& s, const ContentEmbedding<T>& c, DecoderCache* cache = nullptr) const {
    require_shape(s.vector.rows() == 1 && s.dim() == cfg_.speaker_dim,
                  "decode: speaker embedding has dimension " + std::to_string(s.dim()) + ", expected " +
                      std::to_string(cfg_.speaker_dim));
    require_shape(c.data.cols() == cfg_.content_dim, "decode: content embedding has " + std::to_string(c.data.cols()) +
                                                         " channels, expected " + std::to_string(cfg_.content_dim));
    const std::size_t B = decoder_conv_.size();
    if (cache) {
      cache->conv.resize(B);
      cache->conv_out.resize(B);
      cache->style.resize(B);
      cache->gamma.resize(B);
      cache->beta.resize(B);
      cache->adain.resize(B);
    }
    Mat<T> h = c.data;
    for (std::size_t i = 0; i < B; ++i) {
      Mat<T> a = act(decoder_conv_[i].forward(h, cache ? &cache->conv[i] : nullptr));
      auto [gamma, beta] = style_for(s, i, cache ? &cache->style[i] : nullptr);
      h = nn::adain(a, gamma, beta, cfg_.eps, cache ? &cache->adain[i] : nullptr);
      if (cache) {
        cache->conv_out[i] = std::move(a);
        cache->gamma[i] = std::move(gamma);
        cache->beta[i] = std::move(beta);
      }
    }
    return decoder_out_.forward(h, cache ? &cache->out : nullptr);
  }

  struct DecodeGrads {
    Mat<T> d_speaker;
    Mat<T> d_content;
  };

  DecodeGrads backward_decode(const Mat<T>& d_out, const DecoderCache& cache) {
    DecodeGrads g;
    g.d_speaker = Mat<T>::Zero(1, cfg_.speaker_dim);
    Mat<T> dh = decoder_out_.backward(d_out, cache.out);
    for (std::size_t i = decoder_conv_.size(); i-- > 0;) {
      auto ag = nn::adain_backward(dh, cache.adain[i]);
      Mat<T> dgb(1, 2 * cfg_.decoder_channels);
      dgb << ag.dgamma, ag.dbeta;
      g.d_speaker += decoder_style_[i].backward(dgb, cache.style[i]);
      dh = decoder_conv_[i].backward(act_backward(ag.dx, cache.conv_out[i]), cache.conv[i]);
    }
    g.d_content = std::move(dh);
    return g;
  }

  // ---- full autoencoder ----

  struct Cache {
    SpeakerCache speaker;
    ContentCache content;
    DecoderCache decoder;
  };

  Mat<T> reconstruct(const Mat<T>& x, Cache* cache = nullptr) const {
    auto s = encode_speaker(x, cache ? &cache->speaker : nullptr);
    auto c = encode_content(x, cache ? &cache->content : nullptr);
    return decode(s, c, cache ? &cache->decoder : nullptr);
  }

  /// Accumulates gradients of the L1 reconstruction loss; returns the loss.
  double loss_and_backward(const Mat<T>& x, T weight = T(1)) {
    Cache cache;
    const Mat<T> x_hat = reconstruct(x, &cache);
    const double loss = sdn_loss(x, x_hat);
    const DecodeGrads g = backward_decode(weight * sdn_loss_grad(x, x_hat), cache.decoder);
    backward_speaker(g.d_speaker, cache.speaker);
    backward_content(g.d_content, cache.content);
    return loss;
  }

 private:
  void check_input(const Mat<T>& x) const {
    require_shape(x.cols() == cfg_.input_dim, "sdn: expected " + std::to_string(cfg_.input_dim) + " feature dims, got " +
                                                  std::to_string(x.cols()));
    if (x.rows() < cfg_.min_frames())
      throw DataError("sdn: input has " + std::to_string(x.rows()) + " frames, needs at least " +
                      std::to_string(cfg_.min_frames()));
  }

  Mat<T> act(const Mat<T>& x) const { return cfg_.linear ? x : nn::relu(x); }
  Mat<T> act_backward(const Mat<T>& dy, const Mat<T>& y) const { return cfg_.linear ? dy : nn::relu_backward(dy, y); }

  SdnConfig cfg_;
  std::vector<nn::Conv1d<T>> speaker_conv_;
  nn::Dense<T> speaker_dense_;
  std::vector<nn::Conv1d<T>> content_conv_;
  std::vector<nn::Conv1d<T>> decoder_conv_;
  std::vector<nn::Dense<T>> decoder_style_;
  nn::Dense<T> decoder_out_;
};

}  // namespace safn
