#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace bohm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// t_end at or above this needs --long.
inline constexpr double kLongRunThreshold = 1e5;

struct Invocation {
  std::string command;
  RunConfig config;
  std::filesystem::path out_dir = "out";
  bool long_run = false;
  /// Stop grid runs here and write checkpoints instead of final grids.
  std::optional<double> stop_at;
  /// Continue grid runs from the checkpoints in out_dir.
  bool resume = false;
  bool quiet = false;
  /// compare: grid files to compare directly.
  std::vector<std::filesystem::path> grids;
};

/// Run one subcommand. Progress and error records go to `progress` as JSON
/// lines, the result summary to `out`. Returns the exit code.
int run_command(const Invocation& inv, std::ostream& out, std::ostream& progress);

/// Full command line entry point (argument parsing, config loading, exit
/// code mapping).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bohm::cli
