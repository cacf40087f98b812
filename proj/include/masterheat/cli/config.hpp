#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "masterheat/error.hpp"
#include "masterheat/io.hpp"
#include "masterheat/mild_solver.hpp"
#include "masterheat/operator.hpp"
#include "masterheat/specs.hpp"

namespace masterheat::cli {

/// Schema violation, carrying a location such as "line 3, column 7" or a JSON pointer "/grid/N".
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : InvalidArgument("config error at " + where + ": " + what), where_(where), detail_(what) {}
  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

struct RunConfig {
  std::string command;
  GridSpec grid;
  OperatorParams op;
  WeightSpec weight;
  NonlinearitySpec nonlin;
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  /// Field source for u0 (its t = 0 slice).
  json initial;
  /// Section named after the command, with defaults filled in.
  json params;
  /// Whole configuration after defaults, echoed into reports.
  json resolved;
};

const std::vector<std::string>& commands();

/// Embedded defaults, including one section per command.
json default_config();

/// Parses and validates; every failure is a ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig parse_config(const json& document);
RunConfig load_config(const std::filesystem::path& path);

/// Path of a shipped preset ("name" or "name.json").
std::filesystem::path preset_path(const std::string& name);

/// Field built from a source description: constant, gaussian, plane_wave, front,
/// random_modes or file.
Field make_field(const json& source, const GridSpec& grid, std::uint64_t seed, const std::string& where);

}  // namespace masterheat::cli
