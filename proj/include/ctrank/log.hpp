#pragma once

#include <spdlog/spdlog.h>

namespace ctrank {

/// Process-wide logger writing to stderr. The level comes from the
/// CTRANK_LOG_LEVEL environment variable (trace, debug, info, warn, error,
/// critical, off); default is info.
spdlog::logger& logger();

}  // namespace ctrank
