#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace safn {

enum class LogLevel { debug, info, warn };

using LogSink = std::function<void(LogLevel, const std::string&)>;

inline LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, const std::string& msg) {
    if (level == LogLevel::debug) return;
    std::cerr << (level == LogLevel::warn ? "warning: " : "") << msg << '\n';
  };
  return sink;
}

inline void log_info(const std::string& msg) { log_sink()(LogLevel::info, msg); }
inline void log_warn(const std::string& msg) { log_sink()(LogLevel::warn, msg); }
inline void log_debug(const std::string& msg) { log_sink()(LogLevel::debug, msg); }

/// Replaces the process-wide sink for the lifetime of the guard.
class ScopedLogSink {
 public:
  explicit ScopedLogSink(LogSink sink) : previous_(std::move(log_sink())) { log_sink() = std::move(sink); }
  ~ScopedLogSink() { log_sink() = std::move(previous_); }
  ScopedLogSink(const ScopedLogSink&) = delete;
  ScopedLogSink& operator=(const ScopedLogSink&) = delete;

 private:
  LogSink previous_;
};

}  // namespace safn
