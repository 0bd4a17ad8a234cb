#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace safn::io {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

/// Appends values as little-endian IEEE-754 binary32.
inline void append_f32_le(std::string& out, std::span<const float> values) {
  const std::size_t base = out.size();
  out.resize(base + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
    std::memcpy(out.data() + base + 4 * i, &bits, 4);
  }
}

inline std::vector<float> read_f32(const char* data, std::size_t count, bool little_endian = true) {
  std::vector<float> out(count);
  const bool swap = little_endian != (std::endian::native == std::endian::little);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, data + 4 * i, 4);
    if (swap) bits = byteswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace safn::io
