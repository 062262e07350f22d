#pragma once

#include <string_view>

namespace smbsde::log {

/// Verbosity from SMBSDE_LOG: quiet, warn (default), info, debug.
enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

Level level();
void warn(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace smbsde::log
