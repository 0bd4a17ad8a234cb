#pragma once

// Finite-difference checks for every custom layer and for the downsized
// SDN and inversion stack, in double precision. Layers are scored with a
// fixed random linear readout L = sum(R .* y), so dL/dy = R.

#include <string>
#include <vector>

#include "safn/inversion/inversion.hpp"
#include "safn/nn/gradcheck.hpp"
#include "safn/nn/norm.hpp"
#include "safn/sdn/sdn.hpp"

namespace safn {

struct NamedGradCheck {
  std::string name;
  nn::GradCheckReport report;
};

namespace detail {

inline MatD random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline double readout(const MatD& y, const MatD& r) { return (y.array() * r.array()).sum(); }

}  // namespace detail

/// Instance norm w.r.t. its input (the input is treated as the leaf).
inline nn::GradCheckReport gradcheck_instance_norm(std::uint64_t seed = 1, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  nn::Param<double> x(6, 3);
  x.value = detail::random_mat(6, 3, rng);
  const MatD R = detail::random_mat(6, 3, rng);
  nn::ParamList<double> ps{{"x", &x}};
  return nn::grad_check(
      ps, [&] { return detail::readout(nn::instance_norm(x.value), R); },
      [&] {
        nn::InstanceNormCache<double> c;
        nn::instance_norm(x.value, nn::kDefaultNormEps, &c);
        x.grad = nn::instance_norm_backward(R, c);
      },
      o);
}

inline nn::GradCheckReport gradcheck_adain(std::uint64_t seed = 2, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  nn::Param<double> x(6, 3), g(1, 3), b(1, 3);
  x.value = detail::random_mat(6, 3, rng);
  g.value = detail::random_mat(1, 3, rng);
  b.value = detail::random_mat(1, 3, rng);
  const MatD R = detail::random_mat(6, 3, rng);
  nn::ParamList<double> ps{{"x", &x}, {"gamma", &g}, {"beta", &b}};
  return nn::grad_check(
      ps, [&] { return detail::readout(nn::adain(x.value, g.value, b.value), R); },
      [&] {
        nn::AdainCache<double> c;
        nn::adain(x.value, g.value, b.value, nn::kDefaultNormEps, &c);
        const auto gr = nn::adain_backward(R, c);
        x.grad = gr.dx;
        g.grad = gr.dgamma;
        b.grad = gr.dbeta;
      },
      o);
}

inline nn::GradCheckReport gradcheck_conv1d(std::uint64_t seed = 3, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  nn::Conv1d<double> conv(3, 4, 5);
  conv.init(rng);
  nn::Param<double> x(7, 3);
  x.value = detail::random_mat(7, 3, rng);
  const MatD R = detail::random_mat(7, 4, rng);
  nn::ParamList<double> ps{{"x", &x}};
  conv.collect(ps, "conv");
  return nn::grad_check(
      ps, [&] { return detail::readout(conv.forward(x.value), R); },
      [&] {
        nn::zero_grads(ps);
        typename nn::Conv1d<double>::Cache c;
        conv.forward(x.value, &c);
        x.grad = conv.backward(R, c);
      },
      o);
}

inline nn::GradCheckReport gradcheck_lstm_cell(std::uint64_t seed = 4, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  nn::LstmCell<double> cell(3, 4, false);
  cell.init(rng);
  nn::Param<double> x(5, 3);
  x.value = detail::random_mat(5, 3, rng);
  const MatD R = detail::random_mat(5, 4, rng);
  nn::ParamList<double> ps{{"x", &x}};
  cell.collect(ps, "lstm");
  return nn::grad_check(
      ps, [&] { return detail::readout(cell.forward(x.value), R); },
      [&] {
        nn::zero_grads(ps);
        typename nn::LstmCell<double>::Cache c;
        cell.forward(x.value, &c);
        x.grad = cell.backward(R, c);
      },
      o);
}

inline nn::GradCheckReport gradcheck_blstm(std::uint64_t seed = 5, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  nn::Blstm<double> layer(3, 4);
  layer.init(rng);
  nn::Param<double> x(5, 3);
  x.value = detail::random_mat(5, 3, rng);
  const MatD R = detail::random_mat(5, 4, rng);
  nn::ParamList<double> ps{{"x", &x}};
  layer.collect(ps, "blstm");
  return nn::grad_check(
      ps, [&] { return detail::readout(layer.forward(x.value), R); },
      [&] {
        nn::zero_grads(ps);
        typename nn::Blstm<double>::Cache c;
        layer.forward(x.value, &c);
        x.grad = layer.backward(R, c);
      },
      o);
}

/// Downsized SDN: 2 input channels, T=6, L1 reconstruction loss.
inline SdnConfig tiny_sdn_config() {
  SdnConfig c;
  c.input_dim = 2;
  c.speaker_channels = {3, 4};
  c.speaker_dim = 4;
  c.content_dim = 3;
  c.content_blocks = 2;
  c.decoder_channels = 3;
  c.decoder_blocks = 2;
  c.kernel = 3;
  return c;
}

inline nn::GradCheckReport gradcheck_sdn(std::uint64_t seed = 6, const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  Sdn<double> sdn(tiny_sdn_config());
  sdn.init(rng);
  const MatD x = detail::random_mat(6, 2, rng);
  auto ps = sdn.params();
  return nn::grad_check(
      ps, [&] { return sdn_loss(x, sdn.reconstruct(x)); },
      [&] {
        nn::zero_grads(ps);
        sdn.loss_and_backward(x);
      },
      o);
}

/// Downsized inversion stack: T=5, every width 4.
inline InversionConfig tiny_inversion_config(const AblationVariant& v) {
  InversionConfig c;
  c.input_dim = 4;
  c.content_dim = 2;
  c.speaker_dim = 2;
  c.kernels = {3, 5};
  c.conv_channels = 2;
  c.afn_hidden = 4;
  c.afn_layers = 2;
  c.afn_fc = 4;
  c.ain_hidden = 4;
  c.ain_layers = 2;
  c.ain_fc = 4;
  c.proj_dim = 4;
  c.variant = v;
  return c;
}

inline nn::GradCheckReport gradcheck_inversion(const AblationVariant& v, std::uint64_t seed = 7,
                                               const nn::GradCheckOptions& o = {}) {
  Rng rng(seed);
  const InversionConfig cfg = tiny_inversion_config(v);
  InversionModel<double> model(cfg);
  model.init(rng);
  const Eigen::Index T = 5;
  const MatD x = detail::random_mat(T, cfg.input_dim, rng);
  const MatD P = detail::random_mat(T, cfg.personalized_dim(), rng);
  const MatD lip = detail::random_mat(T, kArticulatorDims, rng);
  const MatD tongue = detail::random_mat(T, kArticulatorDims, rng);
  const MatD* p = v.use_sdn ? &P : nullptr;
  auto ps = model.params();
  return nn::grad_check(
      ps,
      [&] {
        const auto out = model.forward(x, p);
        return v.use_afn ? safn_loss(lip, out.lip, tongue, out.tongue) : 0.5 * (tongue - out.tongue).squaredNorm();
      },
      [&] {
        nn::zero_grads(ps);
        model.loss_and_backward(x, p, lip, tongue, 0.5, 0.5);
      },
      o);
}

inline std::vector<NamedGradCheck> gradcheck_suite(const nn::GradCheckOptions& o = {}) {
  std::vector<NamedGradCheck> out{{"instance_norm", gradcheck_instance_norm(1, o)},
                                  {"adain", gradcheck_adain(2, o)},
                                  {"conv1d", gradcheck_conv1d(3, o)},
                                  {"lstm_cell", gradcheck_lstm_cell(4, o)},
                                  {"blstm_average", gradcheck_blstm(5, o)},
                                  {"sdn", gradcheck_sdn(6, o)}};
  for (const auto& v : AblationVariant::all()) out.push_back({"inversion_" + v.name(), gradcheck_inversion(v, 7, o)});
  return out;
}

}  // namespace safn
