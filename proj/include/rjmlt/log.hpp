#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <utility>

namespace rjmlt {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from RJMLT_LOG (error|info|debug), read once. Logs go to
// stderr so they never contaminate declared outputs.
inline LogLevel logLevel()
{
    static LogLevel level = [] {
        const char *env = std::getenv("RJMLT_LOG");
        if (!env)
            return LogLevel::Error;
        if (std::strcmp(env, "debug") == 0)
            return LogLevel::Debug;
        if (std::strcmp(env, "info") == 0)
            return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

template <typename... Args>
void logAt(LogLevel level, const char *fmt, Args &&...args)
{
    if (level > logLevel())
        return;
    const char *tag = level == LogLevel::Error ? "error" : level == LogLevel::Info ? "info" : "debug";
    std::fprintf(stderr, "[rjmlt %s] ", tag);
    std::fprintf(stderr, fmt, std::forward<Args>(args)...);
    std::fputc('\n', stderr);
}

#define RJMLT_LOG_INFO(...) ::rjmlt::logAt(::rjmlt::LogLevel::Info, __VA_ARGS__)
#define RJMLT_LOG_DEBUG(...) ::rjmlt::logAt(::rjmlt::LogLevel::Debug, __VA_ARGS__)
#define RJMLT_LOG_ERROR(...) ::rjmlt::logAt(::rjmlt::LogLevel::Error, __VA_ARGS__)

} // namespace rjmlt
