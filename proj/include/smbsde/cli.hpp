#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace smbsde::cli {

enum ExitCode { kOk = 0, kFailure = 1, kInvariant = 2 };

struct RunConfig {
  std::string command;
  std::string model;
  std::string problem;
  std::string out;                   // artifact directory; empty = stdout only
  std::string data;                  // bundled set for verify-all
  std::optional<std::uint64_t> seed;
  std::optional<int> mc_paths;
  std::optional<double> tol;
  std::string convention = "auto";   // auto | implicit | shifted | predictable
  bool override_hypotheses = false;
};

inline const std::vector<std::string> kCommands = {
    "validate",   "simulate",       "build-lattice", "solve-bsde",
    "solve-control", "verify-duality", "verify-all"};

/// Executes one command. Human-readable summary goes to `out`, diagnostics
/// to `err`; JSON/CSV artifacts are written under config.out.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv with CLI11 and dispatches to run().
int main_entry(int argc, char** argv);

}  // namespace smbsde::cli
