#pragma once

// Leveled stderr logging. The threshold comes from PHANTOM_LOG_LEVEL
// (error | info | debug, default info).

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace phantom::log {

enum class Level { error = 0, info = 1, debug = 2 };

inline Level parse_level(const char* text) {
  if (!text) return Level::info;
  const std::string_view v(text);
  if (v == "error") return Level::error;
  if (v == "debug") return Level::debug;
  return Level::info;
}

inline Level& threshold() {
  static Level level = parse_level(std::getenv("PHANTOM_LOG_LEVEL"));
  return level;
}

inline bool enabled(Level level) { return level <= threshold(); }

inline void write(Level level, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
inline void write(Level level, const char* fmt, ...) {
  if (!enabled(level)) return;
  static constexpr const char* kTags[] = {"error", "info", "debug"};
  std::fprintf(stderr, "[phantom %s] ", kTags[static_cast<int>(level)]);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

}  // namespace phantom::log
