#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "safn/core/random.hpp"
#include "safn/core/types.hpp"

namespace safn::nn {

/// A trainable leaf with its gradient slot.
template <class T>
struct Param {
  Mat<T> value;
  Mat<T> grad;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols) : value(Mat<T>::Zero(rows, cols)), grad(Mat<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

template <class T>
struct NamedParam {
  std::string name;
  Param<T>* param;
};

template <class T>
using ParamList = std::vector<NamedParam<T>>;

template <class T>
void zero_grads(const ParamList<T>& params) {
  for (auto& p : params) p.param->zero_grad();
}

template <class T>
double grad_norm(const ParamList<T>& params) {
  double s = 0;
  for (const auto& p : params) s += p.param->grad.template cast<double>().squaredNorm();
  return std::sqrt(s);
}

/// Rescales all gradients so that their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <class T>
double clip_grad_norm(const ParamList<T>& params, double max_norm) {
  const double n = grad_norm(params);
  if (max_norm > 0 && n > max_norm) {
    const T scale = static_cast<T>(max_norm / n);
    for (auto& p : params) p.param->grad *= scale;
  }
  return n;
}

template <class T>
std::size_t count_parameters(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.param->size());
  return n;
}

template <class T>
void xavier_uniform(Param<T>& p, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<T>(rng.uniform(-a, a));
}

/// Copies values between parameter lists of possibly different scalar types.
/// Lists must enumerate the same leaves in the same order.
template <class To, class From>
void copy_values(const ParamList<To>& dst, const ParamList<From>& src) {
  require_shape(dst.size() == src.size(), "parameter lists differ in length");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    require_shape(dst[i].name == src[i].name, "parameter name mismatch: " + dst[i].name + " vs " + src[i].name);
    require_shape(dst[i].param->value.rows() == src[i].param->value.rows() &&
                      dst[i].param->value.cols() == src[i].param->value.cols(),
                  "parameter shape mismatch for " + dst[i].name);
    dst[i].param->value = src[i].param->value.template cast<To>();
  }
}

}  // namespace safn::nn
