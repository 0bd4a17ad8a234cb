#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safn/core/log.hpp"
#include "safn/core/types.hpp"

namespace safn {

/// Articulator positions over time. Missing samples are stored as NaN.
struct EmaTrajectory {
  std::vector<std::string> channels;
  double rate_hz = 100.0;
  MatF data;  // frames x channels, millimetres

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index num_channels() const { return data.cols(); }

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> nan_mask() const {
    return data.array().isNaN();
  }
  bool all_valid() const { return !data.array().isNaN().any(); }
  double duration_s() const { return static_cast<double>(frames()) / rate_hz; }

  void validate() const {
    if (static_cast<Eigen::Index>(channels.size()) != data.cols())
      throw ShapeError("EMA trajectory has " + std::to_string(channels.size()) + " channel names but " +
                       std::to_string(data.cols()) + " columns");
    if (!(rate_hz > 0)) throw DataError("EMA rate must be positive");
    if (data.rows() < 1) throw DataError("EMA trajectory is empty");
  }

  std::optional<Eigen::Index> index_of(const std::string& name) const {
    auto it = std::find(channels.begin(), channels.end(), name);
    if (it == channels.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - channels.begin());
  }
};

inline constexpr std::array<const char*, 6> kLipChannels = {"ULx", "ULz", "LLx", "LLz", "LIx", "LIz"};
inline constexpr std::array<const char*, 6> kTongueChannels = {"T1x", "T1z", "T2x", "T2z", "T3x", "T3z"};

/// The twelve canonical channels, lips first.
inline std::vector<std::string> canonical_channels() {
  std::vector<std::string> out;
  for (auto* c : kLipChannels) out.emplace_back(c);
  for (auto* c : kTongueChannels) out.emplace_back(c);
  return out;
}

class ChannelMapError : public DataError {
 public:
  ChannelMapError(const std::vector<std::string>& missing_names)
      : DataError(make_message(missing_names)), missing(missing_names) {}
  std::vector<std::string> missing;

 private:
  static std::string make_message(const std::vector<std::string>& names) {
    std::string s = "EMA trajectory lacks channels:";
    for (const auto& n : names) s += " " + n;
    return s;
  }
};

struct ChannelBlocks {
  MatF lip;     // T x 6 (ULx, ULz, LLx, LLz, LIx, LIz)
  MatF tongue;  // T x 6 (T1x, T1z, T2x, T2z, T3x, T3z)
};

inline ChannelBlocks select_channels(const EmaTrajectory& ema) {
  std::vector<std::string> missing;
  std::array<Eigen::Index, 12> idx{};
  const auto names = canonical_channels();
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto j = ema.index_of(names[i]);
    if (!j)
      missing.push_back(names[i]);
    else
      idx[i] = *j;
  }
  if (!missing.empty()) throw ChannelMapError(missing);
  ChannelBlocks out{MatF(ema.frames(), 6), MatF(ema.frames(), 6)};
  for (int k = 0; k < 6; ++k) {
    out.lip.col(k) = ema.data.col(idx[k]);
    out.tongue.col(k) = ema.data.col(idx[6 + k]);
  }
  return out;
}

/// Raw-name to canonical-name maps for the EST-track corpora.
inline std::map<std::string, std::string> builtin_channel_map(const std::string& corpus) {
  if (corpus == "mocha") {
    return {{"ul_x", "ULx"}, {"ul_y", "ULz"}, {"ll_x", "LLx"}, {"ll_y", "LLz"},
            {"li_x", "LIx"}, {"li_y", "LIz"}, {"tt_x", "T1x"}, {"tt_y", "T1z"},
            {"tb_x", "T2x"}, {"tb_y", "T2z"}, {"td_x", "T3x"}, {"td_y", "T3z"}};
  }
  if (corpus == "mngu0") {
    return {{"UL_px", "ULx"}, {"UL_pz", "ULz"}, {"LL_px", "LLx"}, {"LL_pz", "LLz"},
            {"LI_px", "LIx"}, {"LI_pz", "LIz"}, {"T1_px", "T1x"}, {"T1_pz", "T1z"},
            {"T2_px", "T2x"}, {"T2_pz", "T2z"}, {"T3_px", "T3x"}, {"T3_pz", "T3z"}};
  }
  return {};
}

/// Renames channels through `map`; names absent from the map are kept.
inline void apply_channel_map(EmaTrajectory& ema, const std::map<std::string, std::string>& map) {
  for (auto& name : ema.channels) {
    auto it = map.find(name);
    if (it != map.end()) name = it->second;
  }
}

struct CleanOptions {
  int max_gap_frames = 5;
};

/// Linearly interpolates NaN runs of at most `max_gap_frames`. Runs touching
/// either end are filled with the nearest valid sample. Returns nullopt (and
/// logs) when a longer run or an all-NaN channel is present.
inline std::optional<EmaTrajectory> clean_trajectory(EmaTrajectory ema, const CleanOptions& opts = {},
                                                     const std::string& label = "") {
  const Eigen::Index T = ema.frames();
  for (Eigen::Index c = 0; c < ema.num_channels(); ++c) {
    auto col = ema.data.col(c);
    Eigen::Index t = 0;
    while (t < T) {
      if (!std::isnan(col(t))) {
        ++t;
        continue;
      }
      Eigen::Index end = t;
      while (end < T && std::isnan(col(end))) ++end;
      const Eigen::Index run = end - t;
      if (run > opts.max_gap_frames || run == T) {
        log_warn("dropping " + (label.empty() ? std::string("trajectory") : label) + ": channel " +
                 ema.channels[static_cast<std::size_t>(c)] + " has a gap of " + std::to_string(run) + " frames");
        return std::nullopt;
      }
      if (t == 0) {
        for (Eigen::Index k = t; k < end; ++k) col(k) = col(end);
      } else if (end == T) {
        for (Eigen::Index k = t; k < end; ++k) col(k) = col(t - 1);
      } else {
        const float a = col(t - 1), b = col(end);
        const double span = static_cast<double>(end - (t - 1));
        for (Eigen::Index k = t; k < end; ++k)
          col(k) = static_cast<float>(a + (b - a) * static_cast<double>(k - (t - 1)) / span);
      }
      t = end;
    }
  }
  return ema;
}

}  // namespace safn
