#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace repute {

/// Library-wide logger. Tests may swap its sinks to capture warnings.
std::shared_ptr<spdlog::logger> logger();

}  // namespace repute
