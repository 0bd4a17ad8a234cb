#pragma once

// Edinburgh Speech Tools track files ("EST_File Track"), the distribution
// format of the MOCHA-TIMIT and MNGU0 articulography data.
//
// Each frame stores a time stamp, a break flag when BreaksPresent is true,
// then one value per channel. Binary payloads are float32 in the byte order
// named by the ByteOrder field (01 = little endian, 10 = big endian).

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "safn/core/binary_io.hpp"
#include "safn/corpus/ema.hpp"

namespace safn {

class EstParseError : public DataError {
 public:
  EstParseError(int line_no, const std::string& what)
      : DataError("EST header line " + std::to_string(line_no) + ": " + what), line(line_no) {}
  int line;
};

class PayloadLengthError : public DataError {
 public:
  using DataError::DataError;
};

namespace detail {

inline bool parse_bool_field(const std::string& v) { return v == "true" || v == "1" || v == "True"; }

}  // namespace detail

inline EmaTrajectory parse_est_track(std::string_view bytes) {
  std::size_t pos = 0;
  int line_no = 0;
  auto next_line = [&](std::string& out) {
    if (pos >= bytes.size()) return false;
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    out.assign(bytes.substr(pos, nl - pos));
    if (!out.empty() && out.back() == '\r') out.pop_back();
    pos = std::min(bytes.size(), nl + 1);
    ++line_no;
    return true;
  };

  std::string line;
  if (!next_line(line) || line.rfind("EST_File Track", 0) != 0)
    throw EstParseError(1, "missing 'EST_File Track' sentinel");

  std::map<std::string, std::string> fields;
  std::map<int, std::string> channel_names;
  bool terminated = false;
  while (next_line(line)) {
    if (line == "EST_Header_End") {
      terminated = true;
      break;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, value;
    ls >> key;
    std::getline(ls >> std::ws, value);
    if (value.empty()) throw EstParseError(line_no, "field '" + key + "' has no value");
    if (key.rfind("Channel_", 0) == 0) {
      try {
        channel_names[std::stoi(key.substr(8))] = value;
      } catch (const std::exception&) {
        throw EstParseError(line_no, "bad channel index in '" + key + "'");
      }
    } else {
      fields[key] = value;
    }
  }
  if (!terminated) throw EstParseError(line_no, "header not terminated by EST_Header_End");

  auto int_field = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw EstParseError(line_no, "header lacks " + key);
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      throw EstParseError(line_no, key + " is not an integer");
    }
  };
  const long n_frames = int_field("NumFrames");
  const long n_channels = int_field("NumChannels");
  if (n_frames < 1 || n_channels < 1) throw EstParseError(line_no, "NumFrames and NumChannels must be positive");
  const bool breaks = fields.count("BreaksPresent") && detail::parse_bool_field(fields["BreaksPresent"]);
  const std::string data_type = fields.count("DataType") ? fields["DataType"] : "ascii";

  EmaTrajectory ema;
  for (long c = 0; c < n_channels; ++c) {
    auto it = channel_names.find(static_cast<int>(c));
    ema.channels.push_back(it != channel_names.end() ? it->second : "ch" + std::to_string(c));
  }
  ema.data.resize(n_frames, n_channels);
  std::vector<double> times(static_cast<std::size_t>(n_frames));
  const long stride = 1 + (breaks ? 1 : 0) + n_channels;

  if (data_type == "binary") {
    bool little = true;
    if (fields.count("ByteOrder")) {
      const auto& bo = fields["ByteOrder"];
      if (bo == "10")
        little = false;
      else if (bo != "01")
        throw EstParseError(line_no, "unknown ByteOrder '" + bo + "'");
    }
    const std::size_t need = static_cast<std::size_t>(n_frames * stride) * 4;
    const std::size_t have = bytes.size() - pos;
    if (have < need)
      throw PayloadLengthError("EST payload holds " + std::to_string(have / (4 * static_cast<std::size_t>(stride))) +
                               " frames, header declares " + std::to_string(n_frames));
    auto vals = io::read_f32(bytes.data() + pos, static_cast<std::size_t>(n_frames * stride), little);
    for (long t = 0; t < n_frames; ++t) {
      const float* row = vals.data() + t * stride;
      times[static_cast<std::size_t>(t)] = row[0];
      for (long c = 0; c < n_channels; ++c) ema.data(t, c) = row[stride - n_channels + c];
    }
  } else if (data_type == "ascii") {
    long t = 0;
    while (t < n_frames && next_line(line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::vector<double> row;
      std::string tok;
      while (ls >> tok) {
        try {
          row.push_back(tok == "nan" || tok == "NaN" ? std::nan("") : std::stod(tok));
        } catch (const std::exception&) {
          throw EstParseError(line_no, "bad number '" + tok + "'");
        }
      }
      if (static_cast<long>(row.size()) != stride)
        throw EstParseError(line_no, "frame has " + std::to_string(row.size()) + " values, expected " +
                                         std::to_string(stride));
      times[static_cast<std::size_t>(t)] = row[0];
      for (long c = 0; c < n_channels; ++c)
        ema.data(t, c) = static_cast<float>(row[static_cast<std::size_t>(stride - n_channels + c)]);
      ++t;
    }
    if (t < n_frames)
      throw PayloadLengthError("EST payload holds " + std::to_string(t) + " frames, header declares " +
                               std::to_string(n_frames));
  } else {
    throw EstParseError(line_no, "unknown DataType '" + data_type + "'");
  }

  if (fields.count("Sample_rate")) {
    ema.rate_hz = std::stod(fields["Sample_rate"]);
  } else if (fields.count("Frame_shift")) {
    ema.rate_hz = 1.0 / std::stod(fields["Frame_shift"]);
  } else if (n_frames >= 2 && times[1] > times[0]) {
    // float32 time stamps: round to the nearest 1e-6 Hz.
    ema.rate_hz = std::round(1e6 / (times[1] - times[0])) / 1e6;
  } else {
    throw EstParseError(line_no, "cannot determine frame rate (need Frame_shift or two time stamps)");
  }
  return ema;
}

struct EstWriteOptions {
  bool binary = true;
  bool little_endian = true;
  bool breaks = true;
};

/// Emits an EST track file. The rate goes into a Sample_rate field as well as
/// the time column so that it round-trips exactly.
inline std::string write_est_track(const EmaTrajectory& ema, const EstWriteOptions& opts = {}) {
  std::ostringstream os;
  os << "EST_File Track\n";
  os << "DataType " << (opts.binary ? "binary" : "ascii") << "\n";
  if (opts.binary) os << "ByteOrder " << (opts.little_endian ? "01" : "10") << "\n";
  os << "NumFrames " << ema.frames() << "\n";
  os << "NumChannels " << ema.num_channels() << "\n";
  os << "NumAuxChannels 0\nEqualSpace 1\n";
  os << "BreaksPresent " << (opts.breaks ? "true" : "false") << "\n";
  os << "CommentChar ;\n";
  os.precision(17);
  os << "Sample_rate " << ema.rate_hz << "\n";
  for (std::size_t c = 0; c < ema.channels.size(); ++c) os << "Channel_" << c << " " << ema.channels[c] << "\n";
  os << "EST_Header_End\n";
  std::string out = os.str();
  if (opts.binary) {
    std::vector<float> row;
    for (Eigen::Index t = 0; t < ema.frames(); ++t) {
      row.clear();
      row.push_back(static_cast<float>(static_cast<double>(t) / ema.rate_hz));
      if (opts.breaks) row.push_back(1.0f);
      for (Eigen::Index c = 0; c < ema.num_channels(); ++c) row.push_back(ema.data(t, c));
      std::string chunk;
      io::append_f32_le(chunk, row);
      if (!opts.little_endian)
        for (std::size_t i = 0; i < chunk.size(); i += 4) std::swap(chunk[i], chunk[i + 3]), std::swap(chunk[i + 1], chunk[i + 2]);
      out += chunk;
    }
  } else {
    std::ostringstream body;
    body.precision(9);
    for (Eigen::Index t = 0; t < ema.frames(); ++t) {
      body << static_cast<double>(t) / ema.rate_hz;
      if (opts.breaks) body << " 1";
      for (Eigen::Index c = 0; c < ema.num_channels(); ++c) body << " " << ema.data(t, c);
      body << "\n";
    }
    out += body.str();
  }
  return out;
}

}  // namespace safn
