#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "masterheat/cli/plot_data.hpp"
#include "masterheat/cli/run.hpp"

using namespace masterheat;
using namespace masterheat::cli;
namespace fs = std::filesystem;

namespace {

// Every report written here is validated against the report schema by a follow-up ctest.
const fs::path report_root = MASTERHEAT_CLI_REPORT_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_text(const std::string& text) { return parse_config(text); }

std::string config_error_where(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "<accepted>";
}

int run_quiet(RunConfig cfg, const std::string& subdir) {
  cfg.output_dir = report_root / subdir;
  cfg.resolved["output_dir"] = cfg.output_dir.string();
  fs::remove_all(cfg.output_dir);
  std::ostringstream log;
  return run(cfg, log);
}

json read_report(const std::string& subdir) { return json::parse(slurp(report_root / subdir / "report.json")); }

int tool(const std::string& args) {
  const std::string cmd = std::string(MASTERHEAT_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("malformed JSON is located by line and column") {
  const std::string where = config_error_where("{\"command\": \"classify\",\n  \"grid\": {\"N\": 32,}\n}");
  CHECK(where == "line 2, column 20");
}

TEST_CASE("schema violations are located by JSON pointer") {
  CHECK(config_error_where(R"({"grid": {"N": 64}})") == "/command");
  CHECK(config_error_where(R"({"command": "fly"})") == "/command");
  CHECK(config_error_where(R"({"command": "solve", "colour": 1})") == "/colour");
  CHECK(config_error_where(R"({"command": "solve", "grid": {"Nx": 64}})") == "/grid/Nx");
  CHECK(config_error_where(R"({"command": "solve", "blowup": {"windw": 5}})") == "/blowup/windw");
  CHECK(config_error_where(R"({"command": "solve", "grid": {"N": "many"}})") == "/grid/N");
  CHECK(config_error_where(R"({"command": "solve", "grid": {"N": 63}})") == "/grid");
  CHECK(config_error_where(R"({"command": "solve", "operator": {"s": 1.5}})").rfind("/operator", 0) == 0);
  CHECK(config_error_where(R"({"command": "solve", "weight": {"form": "wavy"}})") == "/weight/form");
  CHECK(config_error_where(R"({"command": "solve", "seed": -3})") == "/seed");
  CHECK(config_error_where(R"({"command": "solve", "nonlin": {"form": "tabulated", "table": [[0, 1, 2]]}})") == "/nonlin/table/0");
  CHECK(config_error_where(R"({"command": "solve", "initial": 4})") == "/initial");
}

TEST_CASE("unknown keys in field sources are rejected") {
  const RunConfig cfg = parse_text(R"({"command": "solve", "initial": {"kind": "gaussian", "amplitude": 1, "width": 1, "colour": 2}})");
  try {
    make_field(cfg.initial, cfg.grid, 0, "/initial");
    FAIL("accepted an unknown key");
  } catch (const ConfigError& e) {
    CHECK(e.where() == "/initial/colour");
  }
  CHECK_THROWS_AS(make_field(json{{"kind", "noise"}}, cfg.grid, 0, "/initial"), ConfigError);
  CHECK_THROWS_AS(make_field(json{{"kind", "file"}, {"path", "/nonexistent/u.bin"}}, cfg.grid, 0, "/initial"), ConfigError);
}

TEST_CASE("defaults are embedded and echoed") {
  const RunConfig cfg = parse_text(R"({"command": "classify", "grid": {"N": 32}})");
  CHECK(cfg.grid.N == 32);
  CHECK(cfg.grid.L == default_config()["grid"]["L"].get<double>());
  CHECK(cfg.resolved["grid"]["N"] == 32);
  CHECK(cfg.resolved.contains("classify"));
  CHECK_FALSE(cfg.resolved.contains("blowup"));
  CHECK(cfg.op.Cns > 0.0);
}

TEST_CASE("every shipped preset parses") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(preset_path("classify_critical")).parent_path())) {
    CHECK_NOTHROW(load_config(entry.path()));
    ++count;
  }
  CHECK(count >= 10);
  CHECK_THROWS_AS(preset_path("no_such_preset"), ConfigError);
}

TEST_CASE("classify reports the critical exponent") {
  const Outcome out = execute(load_config(preset_path("classify_critical")));
  CHECK(out.exit_code == exit_pass);
  CHECK(out.report["result"]["r_star"] == 2.0);
  CHECK(out.report["result"]["r_star_exact"] == "2");
  CHECK(out.report["result"]["regime"] == "critical");

  const Outcome two = execute(parse_text(R"({"command": "classify", "classify": {"n": 2, "s": "0.5", "alpha": "0", "r": "2"}})"));
  CHECK(two.report["result"]["r_star_exact"] == "3/2");
  CHECK(two.report["result"]["regime"] == "supercritical");
  CHECK(run_quiet(load_config(preset_path("classify_critical")), "classify") == exit_pass);
}

TEST_CASE("apply on a constant field stays within tolerance") {
  const RunConfig cfg = load_config(preset_path("apply_constant"));
  const Outcome out = execute(cfg);
  CHECK(out.exit_code == exit_pass);
  const double tol = cfg.params["tolerance"].get<double>();
  CHECK(out.report["result"]["max_abs_output"].get<double>() <= tol);
  for (const json& q : out.report["result"]["quadrature"]) CHECK(std::abs(q["value"].get<double>()) <= tol);
  CHECK(run_quiet(cfg, "apply") == exit_pass);
}

TEST_CASE("blowup on the stored supercritical scenario") {
  const RunConfig cfg = load_config(preset_path("supercritical_coarse"));
  CHECK(run_quiet(cfg, "blowup") == exit_pass);
  const json report = read_report("blowup");
  CHECK(report["result"]["blowup_suspected"] == true);
  CHECK(report["pass"] == true);

  const std::string csv = slurp(report_root / "blowup" / "blowup_series.csv");
  CHECK(csv.rfind("t[time],J[norm^2*time],J_prime[norm^2],J_second[norm^2/time],margin[1]\n", 0) == 0);
}

TEST_CASE("exit codes: numerical failure and config errors found at run time") {
  RunConfig bounded = load_config(preset_path("supercritical_coarse"));
  bounded.params["expect"] = "bounded";
  CHECK(run_quiet(bounded, "expect_mismatch") == exit_numerical_fail);
  CHECK(read_report("expect_mismatch")["pass"] == false);

  const RunConfig blown = parse_text(R"({"command": "verify-monotone", "grid": {"N": 32, "Mt": 16},
      "nonlin": {"r": 3.0}, "initial": {"kind": "gaussian", "amplitude": 1e4, "width": 1.0}, "solver": {"norm_cap": 1e6}})");
  CHECK(run_quiet(blown, "numerical_error") == exit_numerical_fail);
  const json err = read_report("numerical_error");
  CHECK(err["error"]["type"] == "numerical");
  CHECK(err["error"]["message"].get<std::string>().find("norm cap") != std::string::npos);

  const RunConfig bad_route = parse_text(R"({"command": "apply", "apply": {"route": "sideways"}})");
  CHECK(run_quiet(bad_route, "config_error") == exit_config_error);
  CHECK(read_report("config_error")["error"]["type"] == "config");
}

TEST_CASE("identical config and seed give byte-identical reports") {
  const std::string text = R"({"command": "apply", "grid": {"N": 32, "Mt": 16},
      "apply": {"field": {"kind": "random_modes", "modes": 4, "amplitude": 1.0, "max_index": 3}, "route": "spectral", "points": 5}})";
  RunConfig cfg = parse_config(text);
  REQUIRE(run_quiet(cfg, "seeded") == exit_pass);
  const std::string first = slurp(report_root / "seeded" / "report.json");
  REQUIRE(run_quiet(cfg, "seeded") == exit_pass);
  CHECK(slurp(report_root / "seeded" / "report.json") == first);
  CHECK(json::parse(slurp(report_root / "seeded" / "metadata.json")).contains("timestamp"));
  CHECK(first.find("timestamp") == std::string::npos);

  cfg.seed = 7;
  cfg.resolved["seed"] = 7;
  CHECK(execute(cfg).report["result"]["max_abs_output"] != json::parse(first)["result"]["max_abs_output"]);
}

TEST_CASE("solve writes norms and a readable trajectory") {
  const RunConfig cfg = parse_text(R"({"command": "solve", "grid": {"N": 32, "Mt": 8}, "nonlin": {"r": 1.5}})");
  REQUIRE(run_quiet(cfg, "solve") == exit_pass);
  const json report = read_report("solve");
  CHECK(report["result"]["steps_completed"] == 8);
  const Field u = read_field(report_root / "solve" / "trajectory.bin");
  CHECK(u.grid().N == 32);
  CHECK(u.grid().time_size() == 9);
  CHECK(slurp(report_root / "solve" / "norms.csv").rfind("t[time],l2_norm[", 0) == 0);
  for (const auto& entry : fs::directory_iterator(report_root / "solve"))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("emit_plot_data headers carry units") {
  const json rescale = {{"command", "rescale"},
                        {"result", {{"points", {{{"R", 2.0}, {"lhs", 1.0}, {"rhs", -4.0}}, {{"R", 4.0}, {"lhs", nullptr}, {"rhs", 8.0}}}}}}};
  const auto r = emit_plot_data(rescale);
  REQUIRE(r.size() == 1);
  CHECK(r[0].header == std::vector<std::string>{"log_R[log length]", "log_abs_LHS[log]", "log_abs_RHS[log]"});
  CHECK(r[0].columns[0][1] == doctest::Approx(std::log(4.0)));
  CHECK(r[0].columns[2][0] == doctest::Approx(std::log(4.0)));
  CHECK(std::isnan(r[0].columns[1][1]));

  const RunConfig mono = load_config(preset_path("monotone_front"));
  const auto m = emit_plot_data(execute(mono).report);
  REQUIRE(m.size() == 2);
  CHECK(m[0].header == std::vector<std::string>{"lambda[length]", "min_margin[u]", "violations[count]"});
  CHECK(m[0].columns[0].size() == mono.params["lambdas"].size());
  CHECK(m[1].header[0] == "x1[length]");
  CHECK(m[1].header.size() == mono.params["lambdas"].size() + 1);
  CHECK(run_quiet(mono, "monotone") == exit_pass);

  CHECK(emit_plot_data(json{{"command", "classify"}, {"result", json::object()}}).empty());
  CHECK(emit_plot_data(json{{"command", "blowup"}}).empty());
}

TEST_CASE("command line flags") {
  const fs::path out = report_root / "tool";
  CHECK(tool("--preset classify_critical --out " + out.string()) == 0);
  CHECK(json::parse(slurp(out / "report.json"))["config"]["output_dir"] == out.string());
  CHECK(tool("--preset classify_critical --seed 5 --out " + out.string()) == 0);
  CHECK(json::parse(slurp(out / "report.json"))["config"]["seed"] == 5);
  CHECK(tool("") == exit_config_error);
  CHECK(tool("--preset classify_critical --config x.json") == exit_config_error);
  CHECK(tool("--preset nothing_here") == exit_config_error);
  CHECK(tool("--config /nonexistent.json") == exit_config_error);
  CHECK(tool("--preset classify_critical --seed -1") == exit_config_error);
  CHECK(tool("--bogus") == exit_config_error);
}
