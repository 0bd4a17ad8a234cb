#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "safn/core/log.hpp"
#include "safn/core/types.hpp"
#include "safn/corpus/splits.hpp"

namespace safn {

enum class SplitTag { train, validation, fine_tune, test };

inline const char* to_string(SplitTag t) {
  static const char* names[] = {"train", "validation", "fine_tune", "test"};
  return names[static_cast<int>(t)];
}

enum class NormScope { global, per_speaker };

struct NormalizationStats {
  RowVec<double> mean;
  RowVec<double> std;
  NormScope scope = NormScope::global;

  Eigen::Index dims() const { return mean.size(); }

  static NormalizationStats identity(Eigen::Index dims) {
    return {RowVec<double>::Zero(dims), RowVec<double>::Ones(dims), NormScope::global};
  }
};

inline constexpr double kStdFloor = 1e-8;

/// Per-dimension mean and population std over all frames of `data`.
/// Only training-side data may be fitted on; `tag` names the split the
/// matrices come from.
inline NormalizationStats zscore_fit(const std::vector<const MatF*>& data, SplitTag tag,
                                     NormScope scope = NormScope::global) {
  if (tag != SplitTag::train && tag != SplitTag::fine_tune)
    throw LeakageError(std::string("normalization statistics may not be fitted on the ") + to_string(tag) + " split");
  if (data.empty()) throw DataError("zscore_fit: no data");
  const Eigen::Index D = data.front()->cols();
  RowVec<double> sum = RowVec<double>::Zero(D), sq = RowVec<double>::Zero(D);
  double n = 0;
  for (const MatF* m : data) {
    require_shape(m->cols() == D, "zscore_fit: inconsistent feature dimension");
    const MatD md = m->cast<double>();
    sum += md.colwise().sum();
    n += static_cast<double>(md.rows());
  }
  if (n == 0) throw DataError("zscore_fit: no frames");
  const RowVec<double> mean = sum / n;
  for (const MatF* m : data) sq += (m->cast<double>().rowwise() - mean).array().square().matrix().colwise().sum();
  NormalizationStats s{mean, (sq / n).array().sqrt().matrix(), scope};
  for (Eigen::Index d = 0; d < D; ++d) {
    if (!(s.std(d) > kStdFloor)) {
      if (n > 1) log_warn("zscore_fit: dimension " + std::to_string(d) + " has zero variance; std floored");
      s.std(d) = kStdFloor;
    }
  }
  return s;
}

inline MatF zscore_apply(const MatF& x, const NormalizationStats& s) {
  require_shape(x.cols() == s.dims(), "zscore_apply: dimension mismatch");
  return ((x.cast<double>().rowwise() - s.mean).array().rowwise() / s.std.array()).matrix().cast<float>();
}

inline MatF zscore_unapply(const MatF& x, const NormalizationStats& s) {
  require_shape(x.cols() == s.dims(), "zscore_unapply: dimension mismatch");
  return ((x.cast<double>().array().rowwise() * s.std.array()).matrix().rowwise() + s.mean).cast<float>();
}

}  // namespace safn
