#include "partmatch/log.h"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace partmatch {
namespace {

std::shared_ptr<spdlog::logger>& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = std::make_shared<spdlog::logger>("partmatch",
                                               std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("PARTMATCH_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return instance;
}

}  // namespace

void log_warn(std::string_view message) { logger()->warn("{}", message); }
void log_info(std::string_view message) { logger()->info("{}", message); }
void log_debug(std::string_view message) { logger()->debug("{}", message); }

void set_log_level(std::string_view level) {
  logger()->set_level(spdlog::level::from_str(std::string(level)));
}

}  // namespace partmatch
