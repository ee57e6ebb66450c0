#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace scogen::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline Level& threshold() {
    static Level level = Level::Warn;
    return level;
}

inline void set_level(Level level) { threshold() = level; }

template <typename... Args>
void write(Level level, std::string_view tag, Args&&... args) {
    if (level < threshold()) return;
    std::ostringstream line;
    line << "[scogen " << tag << "] ";
    (line << ... << args);
    line << '\n';
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << line.str();
}

template <typename... Args> void debug(Args&&... a) { write(Level::Debug, "debug", std::forward<Args>(a)...); }
template <typename... Args> void info(Args&&... a) { write(Level::Info, "info", std::forward<Args>(a)...); }
template <typename... Args> void warn(Args&&... a) { write(Level::Warn, "warn", std::forward<Args>(a)...); }
template <typename... Args> void error(Args&&... a) { write(Level::Error, "error", std::forward<Args>(a)...); }

}  // namespace scogen::log
