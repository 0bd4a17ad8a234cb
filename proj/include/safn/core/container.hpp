#pragma once

// Text-header + binary-payload container shared by utterance interchange
// files, feature caches and checkpoints.
//
//   <magic>
//   key value...
//   checksum <16 hex digits of FNV-1a over the payload>
//   end_header
//   <payload: little-endian float32>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "safn/core/binary_io.hpp"
#include "safn/core/hash.hpp"
#include "safn/core/types.hpp"

namespace safn {

class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

struct HeaderBlock {
  std::string magic;
  std::vector<std::pair<std::string, std::string>> fields;

  void set(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }

  std::optional<std::string> find(const std::string& key) const {
    for (const auto& [k, v] : fields)
      if (k == key) return v;
    return std::nullopt;
  }

  std::string get(const std::string& key) const {
    auto v = find(key);
    if (!v) throw DataError("header field '" + key + "' missing");
    return *v;
  }

  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : fields)
      if (k == key) out.push_back(v);
    return out;
  }

  long long get_int(const std::string& key) const {
    const std::string v = get(key);
    try {
      std::size_t pos = 0;
      long long r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw DataError("header field '" + key + "' is not an integer: " + v);
    }
  }

  double get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw DataError("header field '" + key + "' is not a number: " + v);
    }
  }
};

struct Container {
  HeaderBlock header;
  std::vector<float> payload;
};

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string serialize_container(const Container& c) {
  std::string bin;
  io::append_f32_le(bin, c.payload);
  Fnv1a h;
  h.update(bin.data(), bin.size());

  std::string out = c.header.magic + "\n";
  for (const auto& [k, v] : c.header.fields) out += k + " " + v + "\n";
  out += "payload_floats " + std::to_string(c.payload.size()) + "\n";
  out += "checksum " + hex64(h.digest()) + "\n";
  out += "end_header\n";
  out += bin;
  return out;
}

inline Container parse_container(const std::string& bytes, const std::string& expected_magic,
                                 const std::string& origin = "<memory>") {
  Container c;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) return std::nullopt;
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  auto magic = next_line();
  if (!magic || *magic != expected_magic)
    throw DataError(origin + ": not a " + expected_magic + " file");
  c.header.magic = *magic;
  std::optional<std::string> checksum;
  long long n_floats = -1;
  for (;;) {
    auto line = next_line();
    if (!line) throw DataError(origin + ": header not terminated");
    if (*line == "end_header") break;
    const auto sp = line->find(' ');
    std::string key = line->substr(0, sp);
    std::string value = sp == std::string::npos ? "" : line->substr(sp + 1);
    if (key == "checksum") {
      checksum = value;
    } else if (key == "payload_floats") {
      n_floats = std::stoll(value);
    } else {
      c.header.fields.emplace_back(std::move(key), std::move(value));
    }
  }
  if (n_floats < 0 || !checksum) throw DataError(origin + ": header lacks payload size or checksum");
  const std::size_t need = static_cast<std::size_t>(n_floats) * 4;
  if (bytes.size() - pos != need)
    throw DataError(origin + ": payload holds " + std::to_string(bytes.size() - pos) +
                    " bytes, header declares " + std::to_string(need));
  Fnv1a h;
  h.update(bytes.data() + pos, need);
  if (hex64(h.digest()) != *checksum)
    throw ChecksumError(origin + ": payload checksum mismatch");
  c.payload = io::read_f32(bytes.data() + pos, static_cast<std::size_t>(n_floats));
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace safn
