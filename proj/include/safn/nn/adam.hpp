#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "safn/nn/param.hpp"

namespace safn::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  struct Moments {
    Mat<T> m, v;
  };

  void step(const ParamList<T>& params, double lr) {
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T step_size = static_cast<T>(lr / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2), eps = static_cast<T>(cfg_.eps);
    for (const auto& np : params) {
      Param<T>& p = *np.param;
      Moments& mo = state_[np.name];
      if (mo.m.size() == 0) {
        mo.m = Mat<T>::Zero(p.value.rows(), p.value.cols());
        mo.v = Mat<T>::Zero(p.value.rows(), p.value.cols());
      }
      mo.m = b1 * mo.m + (T(1) - b1) * p.grad;
      mo.v = b2 * mo.v + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
      p.value.array() -= step_size * mo.m.array() / ((mo.v.array() * inv_c2).sqrt() + eps);
    }
  }

  void step(const ParamList<T>& params) { step(params, cfg_.learning_rate); }

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  std::map<std::string, Moments>& state() { return state_; }
  const std::map<std::string, Moments>& state() const { return state_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t steps_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace safn::nn
