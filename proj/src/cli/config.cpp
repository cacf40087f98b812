#include "masterheat/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace masterheat::cli {

namespace {

std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }

const json& member(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(child(where, key), "missing required key");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_number()) throw ConfigError(child(where, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(child(where, key), "expected a finite number");
  return d;
}

double number_in(const json& obj, const std::string& key, const std::string& where, double lo, double hi) {
  const double d = number(obj, key, where);
  if (d < lo || d > hi)
    throw ConfigError(child(where, key), "value " + format_number(d) + " outside [" + format_number(lo) + ", " +
                                             format_number(hi) + "]");
  return d;
}

int integer(const json& obj, const std::string& key, const std::string& where, long lo, long hi) {
  const json& v = member(obj, key, where);
  if (!v.is_number_integer()) throw ConfigError(child(where, key), "expected an integer");
  const long i = v.get<long>();
  if (i < lo || i > hi)
    throw ConfigError(child(where, key),
                      "value " + std::to_string(i) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(i);
}

bool boolean(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_boolean()) throw ConfigError(child(where, key), "expected true or false");
  return v.get<bool>();
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_string()) throw ConfigError(child(where, key), "expected a string");
  return v.get<std::string>();
}

std::array<double, 3> triple(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_array() || v.size() > 3) throw ConfigError(child(where, key), "expected an array of at most 3 numbers");
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(child(where, key) + "/" + std::to_string(i), "expected a number");
    out[i] = v[i].get<double>();
  }
  return out;
}

std::vector<std::pair<double, double>> table(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_array()) throw ConfigError(child(where, key), "expected an array of [x, y] pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& row = v[i];
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
      throw ConfigError(child(where, key) + "/" + std::to_string(i), "expected [x, y]");
    out.emplace_back(row[0].get<double>(), row[1].get<double>());
  }
  return out;
}

void reject_unknown(const json& given, const json& defaults, const std::string& where) {
  if (!given.is_object()) throw ConfigError(where.empty() ? "/" : where, "expected an object");
  for (auto it = given.begin(); it != given.end(); ++it)
    if (!defaults.contains(it.key())) throw ConfigError(child(where, it.key()), "unknown key");
}

/// Turns a library precondition failure into a located config error.
template <class F>
void located(const std::string& where, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(where, e.what());
  }
}

std::string locate_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

json command_defaults() {
  return {
      {"apply",
       {{"field", {{"kind", "plane_wave"}, {"amplitude", 1.0}, {"xi", {M_PI, 0.0, 0.0}}, {"omega", M_PI}, {"envelope", 2.5}}},
        {"route", "both"},
        {"history", "periodic"},
        {"points", 20},
        {"tolerance", 0.05}}},
      {"solve", {{"write_trajectory", true}}},
      {"verify-monotone",
       {{"field", {{"kind", "solve"}}},
        {"lambdas", {-1.0, -0.5, 0.0}},
        {"x1_min", -1e300},
        {"x1_max", 1e300},
        {"m_first", 0},
        {"m_last", -1},
        {"required_margin", 0.0}}},
      {"verify-symmetry", {{"field", {{"kind", "solve"}}}, {"mode", "even_x1"}, {"tol", 1e-6}}},
      {"classify", {{"n", 1}, {"s", "1/2"}, {"alpha", "0"}, {"r", "2"}}},
      {"rescale",
       {{"trajectory", {{"kind", "solve"}}}, {"R", {0.5, 1.0, 2.0}}, {"identity_tol", 0.05}, {"slope_tol", 0.1}}},
      {"blowup", {{"window", 10}, {"cap", 1e6}, {"expect", "any"}}},
      {"barrier", {{"R", 3.0}, {"beta", 1.0 / 3.0}, {"time_stride", 1}}},
      {"calibrate", {{"resolution", 1}, {"max_residual", 1e-3}}},
  };
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"apply",  "solve",   "verify-monotone", "verify-symmetry", "classify",
                                                 "rescale", "blowup", "barrier",         "calibrate"};
  return names;
}

json default_config() {
  json d = {
      {"command", "solve"},
      {"grid", {{"n", 1}, {"L", 8.0}, {"N", 128}, {"T", 1.0}, {"Mt", 64}, {"periodic", true}}},
      {"operator",
       {{"s", 0.5}, {"Cns", 0.0}, {"near_split", 0.0}, {"far_cut", 0.0}, {"nodes_per_panel", 6}, {"gaussian_cutoff", 1e-16}}},
      {"weight", {{"form", "magnitude_power"}, {"exponent", 0.0}, {"coefficient", 1.0}, {"table", json::array()}}},
      {"nonlin", {{"form", "power"}, {"r", 2.0}, {"table", json::array()}}},
      {"solver",
       {{"picard_tol", 1e-10}, {"picard_max", 60}, {"ball_radius", 0.0}, {"norm_cap", 1e8}, {"dealias", true}}},
      {"seed", 0},
      {"output_dir", "out"},
      {"initial", {{"kind", "gaussian"}, {"amplitude", 0.1}, {"width", 1.0}, {"center", {0.0, 0.0, 0.0}}, {"decay", 0.0}}},
  };
  const json sections = command_defaults();
  for (auto it = sections.begin(); it != sections.end(); ++it) d[it.key()] = *it;
  return d;
}

RunConfig parse_config(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(locate_byte(text, e.byte), "malformed JSON");
  }
  return parse_config(document);
}

RunConfig parse_config(const json& document) {
  const json defaults = default_config();
  reject_unknown(document, defaults, "");
  for (const char* section : {"grid", "operator", "weight", "nonlin", "solver"})
    if (document.contains(section)) reject_unknown(document[section], defaults[section], std::string("/") + section);
  for (const std::string& cmd : commands())
    if (document.contains(cmd)) reject_unknown(document[cmd], defaults[cmd], "/" + cmd);
  if (!document.contains("command")) throw ConfigError("/command", "missing required key");

  json merged = defaults;
  for (auto it = document.begin(); it != document.end(); ++it) {
    // Field sources are replaced whole rather than merged.
    if (it.key() == "initial") {
      merged["initial"] = it.value();
    } else if (merged[it.key()].is_object() && it.value().is_object()) {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) merged[it.key()][jt.key()] = jt.value();
    } else {
      merged[it.key()] = it.value();
    }
  }

  RunConfig cfg;
  cfg.command = text(merged, "command", "");
  if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end())
    throw ConfigError("/command", "unknown command '" + cfg.command + "'");

  const json& g = merged["grid"];
  cfg.grid.n = integer(g, "n", "/grid", 1, 3);
  cfg.grid.L = number(g, "L", "/grid");
  cfg.grid.N = integer(g, "N", "/grid", 8, 1 << 16);
  cfg.grid.T = number(g, "T", "/grid");
  cfg.grid.Mt = integer(g, "Mt", "/grid", 1, 1 << 20);
  cfg.grid.periodic = boolean(g, "periodic", "/grid");
  located("/grid", [&] { cfg.grid.validate(); });

  const json& o = merged["operator"];
  cfg.op.s = number(o, "s", "/operator");
  cfg.op.Cns = number_in(o, "Cns", "/operator", 0.0, 1e300);
  cfg.op.quad.near_split = number_in(o, "near_split", "/operator", 0.0, 1e300);
  cfg.op.quad.far_cut = number_in(o, "far_cut", "/operator", 0.0, 1e300);
  cfg.op.quad.nodes_per_panel = integer(o, "nodes_per_panel", "/operator", 4, 30);
  cfg.op.quad.gaussian_cutoff = number_in(o, "gaussian_cutoff", "/operator", 0.0, 1e-3);
  if (cfg.op.Cns == 0.0)
    located("/operator/s", [&] {
      if (!(cfg.op.s > 0.0 && cfg.op.s < 1.0)) throw InvalidArgument("s must lie in (0, 1)");
      cfg.op.Cns = analytic_Cns(cfg.grid.n, cfg.op.s);
    });
  located("/operator", [&] { cfg.op.validate(); });

  const json& w = merged["weight"];
  const std::string wform = text(w, "form", "/weight");
  const double exponent = number(w, "exponent", "/weight");
  const double coefficient = number(w, "coefficient", "/weight");
  located("/weight", [&] {
    if (wform == "odd_monomial") cfg.weight = WeightSpec::odd_monomial(exponent, coefficient);
    else if (wform == "signed_power") cfg.weight = WeightSpec::signed_power(exponent, coefficient);
    else if (wform == "magnitude_power") cfg.weight = WeightSpec::magnitude_power(exponent, coefficient, cfg.grid.n);
    else if (wform == "tabulated") cfg.weight = WeightSpec::tabulated(table(w, "table", "/weight"));
    else throw ConfigError("/weight/form", "unknown weight form '" + wform + "'");
    cfg.weight.validate();
  });

  const json& f = merged["nonlin"];
  const std::string fform = text(f, "form", "/nonlin");
  located("/nonlin", [&] {
    if (fform == "power") cfg.nonlin = NonlinearitySpec::power(number(f, "r", "/nonlin"));
    else if (fform == "tabulated") cfg.nonlin = NonlinearitySpec::tabulated(table(f, "table", "/nonlin"));
    else if (fform == "zero") cfg.nonlin = NonlinearitySpec::zero();
    else throw ConfigError("/nonlin/form", "unknown nonlinearity form '" + fform + "'");
    cfg.nonlin.validate();
  });

  const json& sv = merged["solver"];
  cfg.solver.T = cfg.grid.T;
  cfg.solver.Mt = cfg.grid.Mt;
  cfg.solver.picard_tol = number_in(sv, "picard_tol", "/solver", 1e-15, 1.0);
  cfg.solver.picard_max = integer(sv, "picard_max", "/solver", 1, 100000);
  cfg.solver.ball_radius = number_in(sv, "ball_radius", "/solver", 0.0, 1e300);
  cfg.solver.norm_cap = number_in(sv, "norm_cap", "/solver", 0.0, 1e300);
  cfg.solver.dealias = boolean(sv, "dealias", "/solver");
  located("/solver", [&] { cfg.solver.validate(); });

  const json& seed = merged["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) throw ConfigError("/seed", "expected a non-negative integer");
  cfg.seed = seed.get<std::uint64_t>();
  cfg.output_dir = text(merged, "output_dir", "");
  if (!merged["initial"].is_object()) throw ConfigError("/initial", "expected a field source object");
  cfg.initial = merged["initial"];
  cfg.params = merged[cfg.command];

  cfg.resolved = merged;
  for (const std::string& cmd : commands())
    if (cmd != cfg.command) cfg.resolved.erase(cmd);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + " " + e.where(), e.detail());
  }
}

std::filesystem::path preset_path(const std::string& name) {
  std::filesystem::path dir = MASTERHEAT_PRESET_DIR;
  if (const char* env = std::getenv("MASTERHEAT_PRESET_DIR")) dir = env;
  std::filesystem::path p = dir / name;
  if (p.extension() != ".json") p += ".json";
  if (!std::filesystem::exists(p)) throw ConfigError("--preset", "no preset named '" + name + "' in " + dir.string());
  return p;
}

Field make_field(const json& source, const GridSpec& grid, std::uint64_t seed, const std::string& where) {
  const std::string kind = text(source, "kind", where);
  auto allow = [&](std::initializer_list<const char*> keys) {
    json allowed = json::object();
    for (const char* k : keys) allowed[k] = true;
    allowed["kind"] = true;
    reject_unknown(source, allowed, where);
  };
  const int n = grid.n;
  if (kind == "constant") {
    allow({"value"});
    const double c = number(source, "value", where);
    return sample([c](const std::array<double, 3>&, double) { return c; }, grid);
  }
  if (kind == "gaussian") {
    allow({"amplitude", "width", "center", "decay"});
    const double A = number(source, "amplitude", where);
    const double w = number_in(source, "width", where, 1e-12, 1e300);
    const auto c = source.contains("center") ? triple(source, "center", where) : std::array<double, 3>{};
    const double decay = source.contains("decay") ? number(source, "decay", where) : 0.0;
    return sample(
        [=](const std::array<double, 3>& x, double t) {
          double r2 = 0.0;
          for (int d = 0; d < n; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
          return A * std::exp(-r2 / (w * w) - decay * t);
        },
        grid);
  }
  if (kind == "plane_wave") {
    allow({"amplitude", "xi", "omega", "envelope"});
    const double A = number(source, "amplitude", where);
    const auto xi = triple(source, "xi", where);
    const double omega = number(source, "omega", where);
    const double env = number_in(source, "envelope", where, 0.0, 1e300);
    return sample(
        [=](const std::array<double, 3>& x, double t) {
          double phase = omega * t, r2 = 0.0;
          for (int d = 0; d < n; ++d) {
            phase += xi[d] * x[d];
            r2 += x[d] * x[d];
          }
          return A * std::cos(phase) * (env > 0.0 ? std::exp(-r2 / (env * env)) : 1.0);
        },
        grid);
  }
  if (kind == "front") {
    allow({"amplitude", "width", "center", "offset", "decay"});
    const double A = number(source, "amplitude", where);
    const double w = number_in(source, "width", where, 1e-12, 1e300);
    const double c = source.contains("center") ? number(source, "center", where) : 0.0;
    const double offset = source.contains("offset") ? number(source, "offset", where) : 0.0;
    const double decay = source.contains("decay") ? number(source, "decay", where) : 0.0;
    return sample(
        [=](const std::array<double, 3>& x, double t) { return offset + A * std::tanh((x[0] - c) / w) * std::exp(-decay * t); },
        grid);
  }
  if (kind == "random_modes") {
    allow({"modes", "amplitude", "max_index"});
    const int modes = integer(source, "modes", where, 1, 1000);
    const double A = number(source, "amplitude", where);
    const int kmax = integer(source, "max_index", where, 0, grid.N / 3);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> index(-kmax, kmax);
    std::uniform_int_distribution<int> tindex(-2, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    struct Mode {
      std::array<double, 3> xi{};
      double omega, amp, phase;
    };
    std::vector<Mode> list;
    for (int k = 0; k < modes; ++k) {
      Mode m{};
      for (int d = 0; d < n; ++d) m.xi[d] = M_PI * index(rng) / grid.L;
      m.omega = 2.0 * M_PI * tindex(rng) / grid.T;
      m.amp = A * unit(rng) / modes;
      m.phase = M_PI * unit(rng);
      list.push_back(m);
    }
    return sample(
        [list, n](const std::array<double, 3>& x, double t) {
          double v = 0.0;
          for (const Mode& m : list) {
            double phase = m.omega * t + m.phase;
            for (int d = 0; d < n; ++d) phase += m.xi[d] * x[d];
            v += m.amp * std::cos(phase);
          }
          return v;
        },
        grid);
  }
  if (kind == "file") {
    allow({"path"});
    const std::string path = text(source, "path", where);
    Field field = [&] {
      try {
        return read_field(path);
      } catch (const InvalidArgument& e) {
        throw ConfigError(child(where, "path"), e.what());
      }
    }();
    if (!field.grid().same_space(grid)) throw ConfigError(child(where, "path"), "field grid differs from /grid");
    return field;
  }
  throw ConfigError(child(where, "kind"), "unknown field source '" + kind + "'");
}

}  // namespace masterheat::cli
