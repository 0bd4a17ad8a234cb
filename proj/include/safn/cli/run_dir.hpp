#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>

#include "safn/core/types.hpp"

namespace safn {

/// Creates `<out>/<command>-YYYYmmdd-HHMMSS[-n]`; never reuses a directory.
inline std::filesystem::path make_run_dir(const std::filesystem::path& out, const std::string& command) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  std::filesystem::create_directories(out);
  const std::string base = command + "-" + stamp;
  for (int n = 0; n < 10000; ++n) {
    const auto dir = out / (n == 0 ? base : base + "-" + std::to_string(n));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw DataError("could not create a fresh run directory under " + out.string());
}

}  // namespace safn
