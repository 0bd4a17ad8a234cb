#pragma once

// Ridge least-squares linear probe: one-hot targets, standardized inputs,
// arg-max decision.

#include <vector>

#include "safn/core/types.hpp"

namespace safn {

struct ProbeOptions {
  double ridge = 1e-2;
  double std_floor = 1e-6;
};

/// Held-out accuracy of a linear classifier fit on (x_train, y_train).
inline double linear_probe_accuracy(const MatD& x_train, const std::vector<int>& y_train, const MatD& x_test,
                                    const std::vector<int>& y_test, const ProbeOptions& opts = {}) {
  require_shape(x_train.rows() == static_cast<Eigen::Index>(y_train.size()), "probe: train label count mismatch");
  require_shape(x_test.rows() == static_cast<Eigen::Index>(y_test.size()), "probe: test label count mismatch");
  require_shape(x_train.cols() == x_test.cols(), "probe: feature dimension mismatch");
  if (x_train.rows() == 0 || x_test.rows() == 0) throw DataError("probe: empty split");
  int classes = 0;
  for (int y : y_train) classes = std::max(classes, y + 1);
  for (int y : y_test) classes = std::max(classes, y + 1);

  const RowVec<double> mu = x_train.colwise().mean();
  RowVec<double> sd = ((x_train.rowwise() - mu).array().square().colwise().mean()).sqrt().matrix();
  sd = sd.cwiseMax(opts.std_floor);
  auto standardize = [&](const MatD& x) -> MatD { return (x.rowwise() - mu).array().rowwise() / sd.array(); };
  const MatD a = standardize(x_train);

  MatD y = MatD::Zero(a.rows(), classes);
  for (std::size_t i = 0; i < y_train.size(); ++i) y(static_cast<Eigen::Index>(i), y_train[i]) = 1.0;
  const RowVec<double> y_mean = y.colwise().mean();
  const MatD yc = y.rowwise() - y_mean;

  MatD gram = a.transpose() * a;
  gram.diagonal().array() += opts.ridge * static_cast<double>(a.rows());
  const MatD w = gram.ldlt().solve(a.transpose() * yc);

  const MatD scores = (standardize(x_test) * w).rowwise() + y_mean;
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index k = 0;
    scores.row(i).maxCoeff(&k);
    correct += static_cast<int>(k) == y_test[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

}  // namespace safn
