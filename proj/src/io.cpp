#include "masterheat/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "masterheat/error.hpp"

namespace masterheat {

json to_json(const GridSpec& grid) {
  return {{"n", grid.n}, {"L", grid.L}, {"N", grid.N}, {"T", grid.T}, {"Mt", grid.Mt}, {"periodic", grid.periodic}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec grid;
  grid.n = j.at("n").get<int>();
  grid.L = j.at("L").get<double>();
  grid.N = j.at("N").get<int>();
  grid.T = j.at("T").get<double>();
  grid.Mt = j.at("Mt").get<int>();
  grid.periodic = j.value("periodic", true);
  grid.validate();
  return grid;
}

json to_json(const QuadratureResult& result, const GridPoint& point) {
  return {{"point", {{"index", point.index}, {"m", point.m}}},
          {"value", result.value},
          {"near_residual", result.near_residual},
          {"tail_bound", result.tail_bound}};
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

static_assert(std::endian::native == std::endian::little, "field files are little-endian");

std::filesystem::path sidecar(const std::filesystem::path& path) {
  std::filesystem::path s = path;
  s += ".json";
  return s;
}

}  // namespace

void write_field(const std::filesystem::path& path, const Field& field) {
  const bool complex = !field.is_real();
  std::vector<double> raw;
  raw.reserve(field.values().size() * (complex ? 2 : 1));
  for (const cplx& v : field.values()) {
    raw.push_back(v.real());
    if (complex) raw.push_back(v.imag());
  }
  std::string bytes(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(double));
  write_atomic(path, bytes);
  json meta = {{"grid", to_json(field.grid())},
               {"kind", complex ? "complex" : "real"},
               {"dtype", "float64-le"},
               {"shape", json::array()}};
  meta["shape"].push_back(field.grid().time_size());
  for (int axis = 0; axis < field.grid().n; ++axis) meta["shape"].push_back(field.grid().N);
  write_atomic(sidecar(path), meta.dump(2) + "\n");
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream meta_in(sidecar(path));
  if (!meta_in) throw InvalidArgument("missing field sidecar: " + sidecar(path).string());
  const json meta = json::parse(meta_in);
  const GridSpec grid = grid_from_json(meta.at("grid"));
  const bool complex = meta.at("kind").get<std::string>() == "complex";

  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("missing field file: " + path.string());
  const std::size_t count = grid.size() * (complex ? 2 : 1);
  std::vector<double> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw InvalidArgument("field file size does not match its grid: " + path.string());

  std::vector<cplx> values(grid.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = complex ? cplx(raw[2 * k], raw[2 * k + 1]) : cplx(raw[k], 0.0);
  return Field(grid, std::move(values), complex ? FieldKind::complex : FieldKind::real);
}

std::string format_number(double value) {
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return os.str();
}

std::string format_csv(std::span<const std::string> header, std::span<const std::vector<double>> columns) {
  if (header.size() != columns.size()) throw InvalidArgument("csv: header and column counts differ");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw InvalidArgument("csv: ragged columns");
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << format_number(columns[c][r]);
    os << '\n';
  }
  return os.str();
}

void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               std::span<const std::vector<double>> columns) {
  write_atomic(path, format_csv(header, columns));
}

}  // namespace masterheat
