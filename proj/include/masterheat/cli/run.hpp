#pragma once

#include <ostream>

#include "masterheat/cli/config.hpp"

namespace masterheat::cli {

enum ExitCode : int { exit_pass = 0, exit_numerical_fail = 1, exit_config_error = 2 };

struct Outcome {
  int exit_code = exit_pass;
  /// Deterministic report (no timestamps), sorted keys.
  json report;
};

/// Runs the command without touching the filesystem, except for reading field sources.
Outcome execute(const RunConfig& config);

/// Executes, then writes report.json, metadata.json, CSV plot data and binary fields into
/// config.output_dir. Numerical failures still produce a report carrying the error payload.
int run(const RunConfig& config, std::ostream& log);

}  // namespace masterheat::cli
