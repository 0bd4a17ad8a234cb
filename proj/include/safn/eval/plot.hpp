#pragma once

// Minimal SVG emitters: trajectory overlays and a grouped CC bar chart.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "safn/core/container.hpp"
#include "safn/eval/report.hpp"

namespace safn {

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<')
      o += "&lt;";
    else if (c == '>')
      o += "&gt;";
    else if (c == '&')
      o += "&amp;";
    else
      o += c;
  }
  return o;
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " +
         num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "start") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

}  // namespace svg

/// One panel per channel, truth solid black, prediction dashed red.
inline std::string trajectory_svg(const MatF& pred, const MatF& truth, const std::vector<std::string>& names,
                                  const std::string& title) {
  require_shape(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "plot: prediction/truth shape mismatch");
  if (pred.rows() == 0) throw DataError("plot: empty prediction set");
  require_shape(static_cast<Eigen::Index>(names.size()) == pred.cols(), "plot: channel name count mismatch");
  const double W = 720, panel = 110, top = 30, left = 60, right = 20;
  const double H = top + panel * static_cast<double>(pred.cols()) + 30;
  std::ostringstream os;
  os << svg::header(W, H) << svg::text(W / 2, 18, title, "middle");
  const double T = static_cast<double>(std::max<Eigen::Index>(pred.rows() - 1, 1));
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    const double y0 = top + panel * static_cast<double>(c);
    const double lo = std::min(pred.col(c).minCoeff(), truth.col(c).minCoeff());
    double hi = std::max(pred.col(c).maxCoeff(), truth.col(c).maxCoeff());
    if (!(hi > lo)) hi = lo + 1;
    auto px = [&](Eigen::Index t) { return left + (W - left - right) * static_cast<double>(t) / T; };
    auto py = [&](double v) { return y0 + 8 + (panel - 20) * (1 - (v - lo) / (hi - lo)); };
    os << "<rect x=\"" << svg::num(left) << "\" y=\"" << svg::num(y0 + 4) << "\" width=\"" << svg::num(W - left - right)
       << "\" height=\"" << svg::num(panel - 12) << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
    os << svg::text(8, y0 + panel / 2, names[static_cast<std::size_t>(c)]);
    for (int series = 0; series < 2; ++series) {
      const MatF& m = series == 0 ? truth : pred;
      os << "<polyline fill=\"none\" stroke=\"" << (series == 0 ? "black" : "#d62728") << "\""
         << (series == 1 ? " stroke-dasharray=\"4 2\"" : "") << " points=\"";
      for (Eigen::Index t = 0; t < m.rows(); ++t) os << svg::num(px(t)) << "," << svg::num(py(m(t, c))) << " ";
      os << "\"/>\n";
    }
  }
  os << svg::text(left, H - 10, "frames (black: measured, red dashed: predicted)");
  os << "</svg>\n";
  return os.str();
}

/// Mean CC bars grouped by scenario, one bar per variant.
inline std::string cc_bar_svg(const std::vector<MetricsReport>& rs, const std::string& title = "mean CC") {
  require_reports(rs);
  std::vector<std::string> scenarios, variants;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : rs) {
    add_unique(scenarios, r.scenario);
    add_unique(variants, r.variant);
  }
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  const double left = 50, top = 30, plot_h = 240, bar_w = 18, gap = 30;
  const double group_w = bar_w * static_cast<double>(variants.size()) + gap;
  const double W = left + group_w * static_cast<double>(scenarios.size()) + 140, H = top + plot_h + 50;
  std::ostringstream os;
  os << svg::header(W, H) << svg::text(W / 2, 18, title, "middle");
  auto py = [&](double v) { return top + plot_h * (1 - std::clamp(v, 0.0, 1.0)); };
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    os << "<line x1=\"" << svg::num(left) << "\" x2=\"" << svg::num(left + group_w * scenarios.size()) << "\" y1=\""
       << svg::num(py(v)) << "\" y2=\"" << svg::num(py(v)) << "\" stroke=\"#ddd\"/>\n"
       << svg::text(left - 6, py(v) + 4, fmt3(v).substr(0, 3), "end");
  }
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const double gx = left + group_w * static_cast<double>(s) + gap / 2;
    os << svg::text(gx + bar_w * static_cast<double>(variants.size()) / 2, top + plot_h + 16, scenarios[s], "middle");
    for (std::size_t v = 0; v < variants.size(); ++v)
      for (const auto& r : rs)
        if (r.scenario == scenarios[s] && r.variant == variants[v] && std::isfinite(r.mean_cc)) {
          const double x = gx + bar_w * static_cast<double>(v);
          os << "<rect x=\"" << svg::num(x) << "\" y=\"" << svg::num(py(r.mean_cc)) << "\" width=\"" << svg::num(bar_w - 2)
             << "\" height=\"" << svg::num(py(0) - py(r.mean_cc)) << "\" fill=\"" << colors[v % 7] << "\"/>\n";
          break;
        }
  }
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const double y = top + 14 * static_cast<double>(v);
    const double x = W - 130;
    os << "<rect x=\"" << svg::num(x) << "\" y=\"" << svg::num(y) << "\" width=\"10\" height=\"10\" fill=\"" << colors[v % 7]
       << "\"/>\n"
       << svg::text(x + 14, y + 9, variants[v]);
  }
  os << "</svg>\n";
  return os.str();
}

/// Writes one trajectory overlay per utterance into `dir`; returns paths.
inline std::vector<std::filesystem::path> plot_outputs(const MetricsReport& report, const std::vector<std::string>& ids,
                                                       const std::vector<MatF>& preds, const std::vector<MatF>& truths,
                                                       const std::filesystem::path& dir) {
  if (preds.empty()) throw DataError("plot: empty prediction set");
  require_shape(preds.size() == truths.size() && preds.size() == ids.size(), "plot: inconsistent input lists");
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto path = dir / ("trajectory_" + ids[i] + ".svg");
    write_file(path, trajectory_svg(preds[i], truths[i], MetricsReport::channel_names(),
                                    ids[i] + " (" + report.scenario + " " + report.variant + ")"));
    out.push_back(path);
  }
  const auto bars = dir / "cc_bars.svg";
  write_file(bars, cc_bar_svg({report}));
  out.push_back(bars);
  return out;
}

}  // namespace safn
