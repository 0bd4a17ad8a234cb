#pragma once

// Central finite differences against analytic gradients, leaf by leaf.
//
//   numeric = (L(p + h) - L(p - h)) / 2h
//   rel     = |analytic - numeric| / max(|analytic|, |numeric|, abs_floor)
//
// abs_floor keeps elements whose true gradient is zero (dead ReLUs, unused
// rows) from turning round-off into a huge relative error.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "safn/nn/param.hpp"

namespace safn::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  double abs_floor = 1e-5;
};

struct GradCheckEntry {
  std::string leaf;
  std::size_t elements = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  double tolerance = 0;

  bool passed() const { return max_rel_error < tolerance; }
};

/// `loss` evaluates the scalar loss at the current parameter values.
/// `backprop` zeroes and refills the analytic gradients of `params`.
inline GradCheckReport grad_check(const ParamList<double>& params, const std::function<double()>& loss,
                                  const std::function<void()>& backprop, const GradCheckOptions& opts = {}) {
  GradCheckReport report;
  report.tolerance = opts.tolerance;
  if (params.empty()) return report;
  backprop();
  for (const auto& np : params) {
    Param<double>& p = *np.param;
    const Mat<double> analytic = p.grad;
    GradCheckEntry e;
    e.leaf = np.name;
    e.elements = static_cast<std::size_t>(p.value.size());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& v = p.value.data()[i];
      const double saved = v;
      v = saved + opts.step;
      const double lp = loss();
      v = saved - opts.step;
      const double lm = loss();
      v = saved;
      const double numeric = (lp - lm) / (2 * opts.step);
      const double a = analytic.data()[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel);
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace safn::nn
