#pragma once

// Table-shaped reports: one row per scenario x variant, six tongue-channel
// RMSE columns plus mean RMSE and mean CC.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "safn/eval/metrics.hpp"

namespace safn {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::vector<std::string> report_columns() {
  auto cols = MetricsReport::channel_names();
  cols.push_back("rmse");
  cols.push_back("cc");
  return cols;
}

inline std::vector<double> report_values(const MetricsReport& r) {
  std::vector<double> v(r.rmse.begin(), r.rmse.end());
  v.push_back(r.mean_rmse);
  v.push_back(r.mean_cc);
  return v;
}

inline void require_reports(const std::vector<MetricsReport>& rs) {
  if (rs.empty()) throw DataError("report_table: no reports");
}

/// Fixed-width text table.
inline std::string report_table(const std::vector<MetricsReport>& rs) {
  require_reports(rs);
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-9s %-9s", "scenario", "variant");
  os << buf;
  for (const auto& c : report_columns()) {
    std::snprintf(buf, sizeof buf, " %7s", c.c_str());
    os << buf;
  }
  os << "\n";
  for (const auto& r : rs) {
    std::snprintf(buf, sizeof buf, "%-9s %-9s", r.scenario.c_str(), r.variant.c_str());
    os << buf;
    for (double v : report_values(r)) {
      std::snprintf(buf, sizeof buf, " %7s", fmt3(v).c_str());
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

inline std::string report_csv(const std::vector<MetricsReport>& rs) {
  require_reports(rs);
  std::ostringstream os;
  os << "scenario,variant,dataset,seed,n_test";
  for (const auto& c : report_columns()) os << "," << c;
  os << "\n";
  for (const auto& r : rs) {
    os << r.scenario << "," << r.variant << "," << r.dataset << "," << r.seed << "," << r.n_test_utterances;
    for (double v : report_values(r)) os << "," << fmt6(v);
    os << "\n";
  }
  return os.str();
}

/// Inverse of report_csv (per-channel CCs are not carried by the CSV).
inline std::vector<MetricsReport> parse_report_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("scenario,variant", 0) != 0) throw DataError("not a report CSV");
  std::vector<MetricsReport> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 13) throw DataError("report CSV line " + std::to_string(lineno) + ": expected 13 fields");
    MetricsReport r;
    r.scenario = f[0];
    r.variant = f[1];
    r.dataset = f[2];
    try {
      r.seed = std::stoull(f[3]);
      r.n_test_utterances = std::stoull(f[4]);
      for (int c = 0; c < 6; ++c) r.rmse[c] = std::stod(f[5 + c]);
      r.mean_rmse = std::stod(f[11]);
      r.mean_cc = std::stod(f[12]);
    } catch (const std::exception&) {
      throw DataError("report CSV line " + std::to_string(lineno) + ": malformed number");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace safn
