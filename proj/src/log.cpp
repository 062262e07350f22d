#include "smbsde/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace smbsde::log {

Level level() {
  static const Level lvl = [] {
    const char* env = std::getenv("SMBSDE_LOG");
    if (!env) return Level::warn;
    const std::string v(env);
    if (v == "quiet") return Level::quiet;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

namespace {
void emit(Level at, const char* tag, std::string_view msg) {
  if (static_cast<int>(level()) >= static_cast<int>(at)) {
    std::cerr << '[' << tag << "] " << msg << '\n';
  }
}
}  // namespace

void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }

}  // namespace smbsde::log
