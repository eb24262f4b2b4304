#include "cbf_shield/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace cbf_shield {

void init_logging() {
  // Log lines go to stderr so stdout stays machine readable.
  auto logger = spdlog::get("cbf_shield");
  if (!logger) logger = spdlog::stderr_color_mt("cbf_shield");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CBF_SHIELD_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept "off" when asked for.
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace cbf_shield
