#pragma once

#include <sstream>
#include <string>

namespace lascopf::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Reads LASCOPF_LOG once (error|warn|info|debug, default warn).
Level threshold();
void set_threshold(Level level);
bool enabled(Level level);
void write(Level level, const std::string& message);

template <typename... Args>
void emit(Level level, Args&&... args) {
    if (!enabled(level)) return;
    std::ostringstream os;
    (os << ... << args);
    write(level, os.str());
}

template <typename... Args> void info(Args&&... args) { emit(Level::info, std::forward<Args>(args)...); }
template <typename... Args> void warn(Args&&... args) { emit(Level::warn, std::forward<Args>(args)...); }
template <typename... Args> void debug(Args&&... args) { emit(Level::debug, std::forward<Args>(args)...); }

}  // namespace lascopf::log
