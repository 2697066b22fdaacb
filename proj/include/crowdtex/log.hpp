#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace crowdtex {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Level comes from the CLBP_LOG env var (error|info|debug), default info.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("CLBP_LOG");
        if (env == nullptr) return LogLevel::info;
        if (std::strcmp(env, "error") == 0) return LogLevel::error;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    const char* tag = level == LogLevel::error ? "error" : (level == LogLevel::info ? "info" : "debug");
    std::fprintf(stderr, "[crowdtex %s] %s\n", tag, msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }

} // namespace crowdtex
