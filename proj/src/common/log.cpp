#include "repute/common/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace repute {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("repute");
    l->set_pattern("[%l] %v");
    return l;
  }();
  return instance;
}

}  // namespace repute
