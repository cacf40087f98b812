#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "masterheat/io.hpp"

namespace masterheat::cli {

struct CsvBundle {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

/// Per-figure series derived from a run report: J(t) for blowup, log-log points for
/// rescale, per-lambda margins and w_lambda profiles for verify-monotone, norms for solve.
std::vector<CsvBundle> emit_plot_data(const json& report);

void write_plot_data(const std::vector<CsvBundle>& bundles, const std::filesystem::path& dir);

}  // namespace masterheat::cli
