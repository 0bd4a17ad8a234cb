#pragma once

// Minimal RIFF/WAVE support: mono or multi-channel PCM16 / float32 input
// (channels are averaged), PCM16 output.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "safn/core/container.hpp"
#include "safn/corpus/interchange.hpp"

namespace safn {

namespace detail {
inline std::uint32_t le32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}
inline std::uint16_t le16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) | static_cast<unsigned char>(p[1]) << 8);
}
inline void put_le(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
}  // namespace detail

inline Audio parse_wav(const std::string& bytes, const std::string& origin = "<memory>") {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw DataError(origin + ": not a RIFF/WAVE file");
  std::size_t pos = 12;
  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = detail::le32(bytes.data() + pos + 4);
    const char* body = bytes.data() + pos + 8;
    if (pos + 8 + size > bytes.size()) throw DataError(origin + ": truncated chunk " + id);
    if (id == "fmt ") {
      format = detail::le16(body);
      channels = detail::le16(body + 2);
      rate = detail::le32(body + 4);
      bits = detail::le16(body + 14);
    } else if (id == "data") {
      if (channels < 1 || rate == 0) throw DataError(origin + ": data chunk before fmt chunk");
      Audio a;
      a.rate_hz = rate;
      if (format == 1 && bits == 16) {
        const std::size_t n = size / (2u * static_cast<unsigned>(channels));
        a.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0;
          for (int c = 0; c < channels; ++c)
            acc += static_cast<std::int16_t>(detail::le16(body + 2 * (i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)))) / 32768.0;
          a.samples[i] = static_cast<float>(acc / channels);
        }
      } else if (format == 3 && bits == 32) {
        const std::size_t n = size / (4u * static_cast<unsigned>(channels));
        auto raw = io::read_f32(body, n * static_cast<std::size_t>(channels));
        a.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0;
          for (int c = 0; c < channels; ++c) acc += raw[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
          a.samples[i] = static_cast<float>(acc / channels);
        }
      } else {
        throw DataError(origin + ": unsupported WAVE encoding (format " + std::to_string(format) + ", " +
                        std::to_string(bits) + " bits)");
      }
      return a;
    }
    pos += 8 + size + (size & 1u);
  }
  throw DataError(origin + ": no data chunk");
}

inline Audio read_wav(const std::filesystem::path& path) { return parse_wav(read_file(path), path.string()); }

inline std::string serialize_wav_pcm16(const Audio& a) {
  std::string out = "RIFF";
  const auto n = static_cast<std::uint32_t>(a.samples.size());
  detail::put_le(out, 36 + 2 * n, 4);
  out += "WAVEfmt ";
  detail::put_le(out, 16, 4);
  detail::put_le(out, 1, 2);
  detail::put_le(out, 1, 2);
  const auto rate = static_cast<std::uint32_t>(a.rate_hz);
  detail::put_le(out, rate, 4);
  detail::put_le(out, rate * 2, 4);
  detail::put_le(out, 2, 2);
  detail::put_le(out, 16, 2);
  out += "data";
  detail::put_le(out, 2 * n, 4);
  for (float s : a.samples) {
    const double clipped = std::max(-1.0, std::min(1.0, static_cast<double>(s)));
    const auto v = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
    detail::put_le(out, static_cast<std::uint16_t>(v), 2);
  }
  return out;
}

}  // namespace safn
