#pragma once

#include <string_view>

namespace partmatch {

// Library diagnostics go to stderr through one shared logger. The level is
// read once from PARTMATCH_LOG (trace, debug, info, warn, error, off);
// default is warn.
void log_warn(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

// Overrides the environment; used by the CLI's -v flag and by tests.
void set_log_level(std::string_view level);

}  // namespace partmatch
