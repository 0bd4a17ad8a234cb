#pragma once

// Supervised inversion stack.
//
//   E = multiscale_conv(x)                     parallel convs, kernels {3,5,7}
//   P = [content | speaker broadcast]          from the frozen SDN
//   A = AFN(P)                                 3 BLSTM + 2 FC -> 6 lip channels
//   F = FTN(P, A, E)                           per-stream affine + concat
//   y_t = AIN(F)                               3 BLSTM + 2 FC -> 6 tongue channels
//
// Ablation variants drop the SDN (P replaced by E), the AFN (no A) or the
// FTN (raw concatenation instead of projections).

#include <string>
#include <vector>

#include "safn/nn/lstm.hpp"
#include "safn/sdn/sdn.hpp"

namespace safn {

enum class VariantKind { sota, safn_s, safn_a, safn_s_a, safn };

struct AblationVariant {
  VariantKind kind = VariantKind::safn;
  bool use_sdn = true;
  bool use_afn = true;
  bool use_ftn = true;

  static AblationVariant make(VariantKind k) {
    switch (k) {
      case VariantKind::sota: return {k, false, false, false};
      case VariantKind::safn_s: return {k, true, false, false};
      case VariantKind::safn_a: return {k, false, true, false};
      case VariantKind::safn_s_a: return {k, true, true, false};
      case VariantKind::safn: return {k, true, true, true};
    }
    throw ConfigError("unknown variant");
  }

  std::string name() const {
    switch (kind) {
      case VariantKind::sota: return "SOTA";
      case VariantKind::safn_s: return "SAFN-S";
      case VariantKind::safn_a: return "SAFN-A";
      case VariantKind::safn_s_a: return "SAFN-S-A";
      case VariantKind::safn: return "SAFN";
    }
    return "?";
  }

  static std::vector<AblationVariant> all() {
    return {make(VariantKind::sota), make(VariantKind::safn_s), make(VariantKind::safn_a), make(VariantKind::safn_s_a),
            make(VariantKind::safn)};
  }
};

inline AblationVariant parse_variant(const std::string& s) {
  for (const auto& v : AblationVariant::all())
    if (v.name() == s) return v;
  throw ConfigError("unknown variant '" + s + "' (expected SOTA|SAFN-S|SAFN-A|SAFN-S-A|SAFN)");
}

struct InversionConfig {
  int input_dim = 39;
  int content_dim = 64;
  int speaker_dim = 128;
  std::vector<int> kernels{3, 5, 7};
  int conv_channels = 32;
  int afn_hidden = 100;
  int afn_layers = 3;
  int afn_fc = 64;
  int ain_hidden = 100;
  int ain_layers = 3;
  int ain_fc = 64;
  int proj_dim = 64;
  bool fuse_encoded_acoustics = true;
  bool linear = false;  // disables the encoder ReLU; used by tests
  AblationVariant variant;

  int encoded_dim() const { return static_cast<int>(kernels.size()) * conv_channels; }
  int personalized_dim() const { return content_dim + speaker_dim; }
  int max_kernel() const {
    int k = 1;
    for (int v : kernels) k = std::max(k, v);
    return k;
  }

  void validate() const {
    if (kernels.empty()) throw ConfigError("inversion: kernel set is empty");
    for (int k : kernels)
      if (k < 1 || k % 2 == 0) throw ConfigError("inversion: kernels must be odd");
    if (afn_layers < 0 || ain_layers < 0) throw ConfigError("inversion: negative layer count");
  }
};

inline constexpr int kArticulatorDims = 6;

/// P: per-frame content embedding with the speaker embedding broadcast to
/// every frame.
template <class T>
Mat<T> personalized_features(const ContentEmbedding<T>& content, const SpeakerEmbedding<T>& speaker) {
  const Mat<T> spk = nn::broadcast_rows(speaker.vector, content.frames());
  return nn::concat_cols<T>({&content.data, &spk});
}

template <class T>
class MultiscaleEncoder {
 public:
  MultiscaleEncoder() = default;
  MultiscaleEncoder(int input, const std::vector<int>& kernels, int channels, bool linear) : linear_(linear) {
    for (int k : kernels) convs_.emplace_back(input, channels, k);
  }

  void init(Rng& rng) {
    for (auto& c : convs_) c.init(rng);
  }

  void collect(nn::ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < convs_.size(); ++i)
      convs_[i].collect(out, prefix + ".k" + std::to_string(convs_[i].kernel()));
  }

  int min_frames() const {
    int k = 1;
    for (const auto& c : convs_) k = std::max(k, c.kernel());
    return k;
  }

  struct Cache {
    std::vector<typename nn::Conv1d<T>::Cache> conv;
    std::vector<Mat<T>> out;
  };

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    if (x.rows() < min_frames())
      throw DataError("multiscale encoder: input has " + std::to_string(x.rows()) + " frames, needs at least " +
                      std::to_string(min_frames()));
    std::vector<Mat<T>> outs(convs_.size());
    if (cache) cache->conv.resize(convs_.size());
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      Mat<T> y = convs_[i].forward(x, cache ? &cache->conv[i] : nullptr);
      outs[i] = linear_ ? y : nn::relu(y);
    }
    std::vector<const Mat<T>*> parts;
    for (const auto& o : outs) parts.push_back(&o);
    Mat<T> e = nn::concat_cols(parts);
    if (cache) cache->out = std::move(outs);
    return e;
  }

  void backward(const Mat<T>& de, const Cache& cache) {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      const Eigen::Index w = convs_[i].out_dim();
      Mat<T> d = de.middleCols(c, w);
      if (!linear_) d = nn::relu_backward(d, cache.out[i]);
      convs_[i].backward(d, cache.conv[i]);
      c += w;
    }
  }

  std::vector<nn::Conv1d<T>>& convs() { return convs_; }

 private:
  bool linear_ = false;
  std::vector<nn::Conv1d<T>> convs_;
};

/// Feature transformation: every stream gets its own affine projection to a
/// common width; the projections are concatenated in stream order.
template <class T>
class FeatureFusion {
 public:
  FeatureFusion() = default;
  FeatureFusion(const std::vector<int>& stream_dims, int proj_dim) {
    for (int d : stream_dims) proj_.emplace_back(d, proj_dim);
  }

  void init(Rng& rng) {
    for (auto& p : proj_) p.init(rng);
  }

  void collect(nn::ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < proj_.size(); ++i) proj_[i].collect(out, prefix + ".proj" + std::to_string(i));
  }

  struct Cache {
    std::vector<typename nn::Dense<T>::Cache> proj;
  };

  Mat<T> forward(const std::vector<const Mat<T>*>& streams, Cache* cache = nullptr) const {
    require_shape(streams.size() == proj_.size(), "ftn: expected " + std::to_string(proj_.size()) + " streams");
    for (const auto* s : streams) require_shape(s->rows() == streams.front()->rows(), "ftn: streams differ in frame count");
    std::vector<Mat<T>> outs(proj_.size());
    if (cache) cache->proj.resize(proj_.size());
    for (std::size_t i = 0; i < proj_.size(); ++i) outs[i] = proj_[i].forward(*streams[i], cache ? &cache->proj[i] : nullptr);
    std::vector<const Mat<T>*> parts;
    for (const auto& o : outs) parts.push_back(&o);
    return nn::concat_cols(parts);
  }

  std::vector<Mat<T>> backward(const Mat<T>& dy, const Cache& cache) {
    std::vector<Mat<T>> grads;
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      const Eigen::Index w = proj_[i].out_dim();
      grads.push_back(proj_[i].backward(dy.middleCols(c, w), cache.proj[i]));
      c += w;
    }
    return grads;
  }

  std::vector<nn::Dense<T>>& projections() { return proj_; }

 private:
  std::vector<nn::Dense<T>> proj_;
};

template <class T>
struct InversionOutput {
  Mat<T> lip;     // frames x 6; empty when the variant has no AFN
  Mat<T> tongue;  // frames x 6
};

/// Combined loss: alpha * sum (lip error)^2 + beta * sum (tongue error)^2,
/// summed over frames and channels.
template <class T>
double safn_loss(const Mat<T>& lip_true, const Mat<T>& lip_pred, const Mat<T>& tongue_true, const Mat<T>& tongue_pred,
                 double alpha = 0.5, double beta = 0.5) {
  require_shape(lip_true.rows() == lip_pred.rows() && lip_true.cols() == lip_pred.cols(), "safn_loss: lip shape mismatch");
  require_shape(tongue_true.rows() == tongue_pred.rows() && tongue_true.cols() == tongue_pred.cols(),
                "safn_loss: tongue shape mismatch");
  if (alpha < 0 || beta < 0) throw ConfigError("safn_loss: weights must be non-negative");
  const double lip = (lip_true - lip_pred).template cast<double>().squaredNorm();
  const double tongue = (tongue_true - tongue_pred).template cast<double>().squaredNorm();
  return alpha * lip + beta * tongue;
}

template <class T>
class InversionModel {
 public:
  InversionModel() = default;
  explicit InversionModel(const InversionConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const auto& v = cfg.variant;
    encoder_ = MultiscaleEncoder<T>(cfg.input_dim, cfg.kernels, cfg.conv_channels, cfg.linear);
    const int acoustic_dim = v.use_sdn ? cfg.personalized_dim() : cfg.encoded_dim();
    if (v.use_afn) afn_ = nn::BlstmRegressor<T>(acoustic_dim, cfg.afn_hidden, cfg.afn_layers, cfg.afn_fc, kArticulatorDims);
    for (int d : stream_dims()) fused_dim_ += v.use_ftn ? cfg.proj_dim : d;
    if (v.use_ftn) ftn_ = FeatureFusion<T>(stream_dims(), cfg.proj_dim);
    ain_ = nn::BlstmRegressor<T>(fused_dim_, cfg.ain_hidden, cfg.ain_layers, cfg.ain_fc, kArticulatorDims);
  }

  void init(Rng& rng) {
    encoder_.init(rng);
    if (cfg_.variant.use_afn) afn_.init(rng);
    if (cfg_.variant.use_ftn) ftn_.init(rng);
    ain_.init(rng);
  }

  const InversionConfig& config() const { return cfg_; }
  int fused_dim() const { return fused_dim_; }

  /// Widths of the fusion streams, in order: acoustic stream (P, or E when
  /// the SDN is absent), lip features A, then E when it is fused alongside P.
  std::vector<int> stream_dims() const {
    const auto& v = cfg_.variant;
    std::vector<int> dims{v.use_sdn ? cfg_.personalized_dim() : cfg_.encoded_dim()};
    if (v.use_afn) dims.push_back(kArticulatorDims);
    if (v.use_sdn && cfg_.fuse_encoded_acoustics) dims.push_back(cfg_.encoded_dim());
    return dims;
  }

  nn::ParamList<T> params() {
    nn::ParamList<T> out;
    encoder_.collect(out, "inv.encoder");
    if (cfg_.variant.use_afn) afn_.collect(out, "inv.afn");
    if (cfg_.variant.use_ftn) ftn_.collect(out, "inv.ftn");
    ain_.collect(out, "inv.ain");
    return out;
  }

  struct Cache {
    typename MultiscaleEncoder<T>::Cache encoder;
    typename nn::BlstmRegressor<T>::Cache afn, ain;
    typename FeatureFusion<T>::Cache ftn;
    std::vector<int> stream_widths;
    Eigen::Index frames = 0;
  };

  /// Intermediate tensors of one forward pass, for inspection.
  struct Trace {
    Mat<T> encoded;
    Mat<T> fused;
  };

  /// `personalized` must be non-null iff the variant uses the SDN.
  InversionOutput<T> forward(const Mat<T>& x, const Mat<T>* personalized, Cache* cache = nullptr,
                             Trace* trace = nullptr) const {
    const auto& v = cfg_.variant;
    require_shape(x.cols() == cfg_.input_dim, "inversion: expected " + std::to_string(cfg_.input_dim) +
                                                  " feature dims, got " + std::to_string(x.cols()));
    if (v.use_sdn) {
      if (!personalized) throw ConfigError("variant " + v.name() + " needs personalized speech features");
      require_shape(personalized->rows() == x.rows() && personalized->cols() == cfg_.personalized_dim(),
                    "inversion: personalized features have the wrong shape");
    }
    Mat<T> E = encoder_.forward(x, cache ? &cache->encoder : nullptr);
    const Mat<T>& acoustic = v.use_sdn ? *personalized : E;

    InversionOutput<T> out;
    std::vector<const Mat<T>*> streams{&acoustic};
    if (v.use_afn) {
      out.lip = afn_.forward(acoustic, cache ? &cache->afn : nullptr);
      streams.push_back(&out.lip);
    }
    if (v.use_sdn && cfg_.fuse_encoded_acoustics) streams.push_back(&E);
    Mat<T> F = v.use_ftn ? ftn_.forward(streams, cache ? &cache->ftn : nullptr) : nn::concat_cols(streams);
    out.tongue = ain_.forward(F, cache ? &cache->ain : nullptr);
    if (cache) {
      cache->frames = x.rows();
      cache->stream_widths.clear();
      for (const auto* s : streams) cache->stream_widths.push_back(static_cast<int>(s->cols()));
    }
    if (trace) {
      trace->encoded = std::move(E);
      trace->fused = std::move(F);
    }
    return out;
  }

  /// Accumulates parameter gradients given dL/d(lip) and dL/d(tongue).
  /// `d_lip` is ignored when the variant has no AFN.
  void backward(const Mat<T>& d_lip, const Mat<T>& d_tongue, const Cache& cache) {
    const auto& v = cfg_.variant;
    const Mat<T> dF = ain_.backward(d_tongue, cache.ain);
    std::vector<Mat<T>> d_streams;
    if (v.use_ftn) {
      d_streams = ftn_.backward(dF, cache.ftn);
    } else {
      Eigen::Index c = 0;
      for (int w : cache.stream_widths) {
        d_streams.push_back(dF.middleCols(c, w));
        c += w;
      }
    }
    std::size_t next = 1;
    Mat<T> dE = Mat<T>::Zero(cache.frames, cfg_.encoded_dim());
    Mat<T> d_acoustic = std::move(d_streams[0]);
    if (v.use_afn) {
      Mat<T> dA = std::move(d_streams[next++]);
      if (d_lip.size() > 0) dA += d_lip;
      d_acoustic += afn_.backward(dA, cache.afn);
    }
    if (v.use_sdn && cfg_.fuse_encoded_acoustics) dE += d_streams[next++];
    if (!v.use_sdn) dE += d_acoustic;  // SDN parameters are frozen: P gets no gradient
    encoder_.backward(dE, cache.encoder);
  }

  /// Forward, combined loss and backward for one utterance. Returns the loss.
  double loss_and_backward(const Mat<T>& x, const Mat<T>* personalized, const Mat<T>& lip_true,
                           const Mat<T>& tongue_true, double alpha, double beta, T grad_scale = T(1)) {
    Cache cache;
    const InversionOutput<T> out = forward(x, personalized, &cache);
    const bool afn = cfg_.variant.use_afn;
    const double loss = afn ? safn_loss(lip_true, out.lip, tongue_true, out.tongue, alpha, beta)
                            : beta * (tongue_true - out.tongue).template cast<double>().squaredNorm();
    Mat<T> d_lip;
    if (afn) d_lip = static_cast<T>(2 * alpha) * grad_scale * (out.lip - lip_true);
    const Mat<T> d_tongue = static_cast<T>(2 * beta) * grad_scale * (out.tongue - tongue_true);
    backward(d_lip, d_tongue, cache);
    return loss;
  }

  MultiscaleEncoder<T>& encoder() { return encoder_; }
  nn::BlstmRegressor<T>& afn() { return afn_; }
  FeatureFusion<T>& ftn() { return ftn_; }
  nn::BlstmRegressor<T>& ain() { return ain_; }

 private:
  InversionConfig cfg_;
  int fused_dim_ = 0;
  MultiscaleEncoder<T> encoder_;
  nn::BlstmRegressor<T> afn_;
  FeatureFusion<T> ftn_;
  nn::BlstmRegressor<T> ain_;
};

/// Full pipeline for one utterance: SDN embeddings -> P -> inversion stack.
template <class T>
InversionOutput<T> forward_full(const Mat<T>& features, const Sdn<T>* sdn, const InversionModel<T>& model) {
  if (!model.config().variant.use_sdn) return model.forward(features, nullptr);
  if (!sdn) throw ConfigError("forward_full: variant " + model.config().variant.name() + " needs a pretrained SDN");
  try {
    const Mat<T> P = personalized_features(sdn->encode_content(features), sdn->encode_speaker(features));
    return model.forward(features, &P);
  } catch (const ShapeError& e) {
    throw ShapeError(std::string("sdn stage: ") + e.what());
  }
}

}  // namespace safn
