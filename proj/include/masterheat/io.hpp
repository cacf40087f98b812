#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "masterheat/field.hpp"
#include "masterheat/operator.hpp"

namespace masterheat {

using nlohmann::json;

json to_json(const GridSpec& grid);
GridSpec grid_from_json(const json& j);

json to_json(const QuadratureResult& result, const GridPoint& point);

/// Writes text to path via a temporary sibling and rename, creating parent directories.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Raw little-endian float64 samples at `path` plus `path.json` carrying the grid.
/// Complex fields store interleaved (re, im) pairs.
void write_field(const std::filesystem::path& path, const Field& field);
Field read_field(const std::filesystem::path& path);

/// CSV with a header row; numbers use 17 significant digits.
std::string format_csv(std::span<const std::string> header, std::span<const std::vector<double>> columns);
void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               std::span<const std::vector<double>> columns);

/// Shortest round-trip decimal of a double, 17 significant digits.
std::string format_number(double value);

}  // namespace masterheat
