#include "lascopf/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace lascopf::log {
namespace {

Level parse_env() {
    const char* raw = std::getenv("LASCOPF_LOG");
    if (!raw) return Level::warn;
    std::string_view v(raw);
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

std::atomic<int>& current() {
    static std::atomic<int> level{static_cast<int>(parse_env())};
    return level;
}

const char* tag(Level level) {
    switch (level) {
        case Level::error: return "error";
        case Level::warn: return "warn";
        case Level::info: return "info";
        case Level::debug: return "debug";
    }
    return "?";
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }
void set_threshold(Level level) { current().store(static_cast<int>(level)); }
bool enabled(Level level) { return static_cast<int>(level) <= current().load(); }

void write(Level level, const std::string& message) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << "[lascopf " << tag(level) << "] " << message << '\n';
}

}  // namespace lascopf::log
