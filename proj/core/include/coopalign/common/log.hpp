#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace coopalign {

/// Library-wide logger writing to stderr. Level comes from the COOPALIGN_LOG
/// environment variable (trace, debug, info, warn, error, off); default warn.
std::shared_ptr<spdlog::logger> logger();

}  // namespace coopalign
