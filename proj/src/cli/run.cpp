#include "masterheat/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include "masterheat/cli/plot_data.hpp"
#include "masterheat/criticality.hpp"
#include "masterheat/moving_planes.hpp"
#include "masterheat/parallel.hpp"

namespace masterheat::cli {

namespace {

std::vector<double> initial_slice(const RunConfig& cfg) {
  GridSpec g0 = cfg.grid;
  g0.Mt = 2;
  return make_field(cfg.initial, g0, cfg.seed, "/initial").real_slice(0);
}

SolveResult solve(const RunConfig& cfg) {
  return picard_solve(initial_slice(cfg), cfg.grid, cfg.weight, cfg.nonlin, cfg.op.s, cfg.solver);
}

json contraction_json(const ContractionReport& rep) {
  json windows = json::array();
  for (const auto& w : rep.windows)
    windows.push_back({{"first_step", w.first_step},
                       {"last_step", w.last_step},
                       {"iterations", w.iterations},
                       {"max_quotient", w.max_quotient},
                       {"converged", w.converged}});
  return {{"quotients", rep.quotients},
          {"windows", windows},
          {"max_quotient", rep.max_quotient},
          {"fixed_point_residual", rep.fixed_point_residual},
          {"iterations", rep.iterations},
          {"blowup_suspected", rep.blowup_suspected},
          {"t_escape", rep.t_escape},
          {"stop_reason", rep.stop_reason}};
}

/// Field source that may also be "solve", which runs the solver on the configured problem.
Field field_from(const json& source, const RunConfig& cfg, const std::string& where, json& result) {
  if (source.is_object() && source.value("kind", "") == "solve") {
    const SolveResult solved = solve(cfg);
    result["solver"] = contraction_json(solved.report);
    if (solved.trajectory.steps() < 1) throw NumericalError("solver produced no steps: " + solved.report.stop_reason);
    return solved.trajectory.as_field();
  }
  return make_field(source, cfg.grid, cfg.seed, where);
}

std::vector<double> number_list(const json& params, const std::string& key, const std::string& where) {
  const json& v = params.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(where + "/" + key, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + "/" + key + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

template <class T>
T get(const json& params, const std::string& key, const std::string& where) {
  try {
    return params.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "/" + key, "wrong type");
  }
}

std::string rational_text(const Rational& q) {
  const auto num = boost::multiprecision::numerator(q);
  const auto den = boost::multiprecision::denominator(q);
  return den == 1 ? num.str() : num.str() + "/" + den.str();
}

json run_apply(const RunConfig& cfg, bool& pass) {
  const std::string where = "/apply";
  json result;
  const Field field = field_from(cfg.params.at("field"), cfg, where + "/field", result);
  const std::string route = get<std::string>(cfg.params, "route", where);
  const std::string hist = get<std::string>(cfg.params, "history", where);
  const int count = get<int>(cfg.params, "points", where);
  const double tol = get<double>(cfg.params, "tolerance", where);
  if (route != "spectral" && route != "quadrature" && route != "both")
    throw ConfigError(where + "/route", "expected spectral, quadrature or both");
  if (count < 1) throw ConfigError(where + "/points", "expected a positive count");
  HistoryPolicy history;
  if (hist == "constant_past") history = HistoryPolicy::constant_past();
  else if (hist == "zero_past") history = HistoryPolicy::zero_past();
  else if (hist == "periodic") history = HistoryPolicy::periodic();
  else throw ConfigError(where + "/history", "expected constant_past, zero_past or periodic");

  const GridSpec& grid = field.grid();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> space(grid.N / 4, 3 * grid.N / 4 - 1);
  std::uniform_int_distribution<int> time(0, grid.Mt - 1);
  std::vector<GridPoint> points(count);
  for (GridPoint& p : points) {
    for (int d = 0; d < grid.n; ++d) p.index[d] = space(rng);
    p.m = time(rng);
  }

  std::vector<double> spectral(count, std::nan("")), quadrature(count, std::nan(""));
  double spectral_max = 0.0;
  if (route != "quadrature") {
    const Field out = apply_spectral(field, cfg.op.s);
    spectral_max = out.max_abs();
    for (int i = 0; i < count; ++i) spectral[i] = out.re(points[i].m, grid.ravel(points[i].index));
    result["max_abs_output"] = spectral_max;
  }
  json qjson = json::array();
  if (route != "spectral") {
    const auto q = apply_quadrature(field, points, cfg.op, history);
    for (int i = 0; i < count; ++i) {
      quadrature[i] = q[i].value;
      qjson.push_back(to_json(q[i], points[i]));
    }
    result["quadrature"] = qjson;
  }
  if (route == "both") {
    double worst = 0.0, worst_abs = 0.0;
    for (int i = 0; i < count; ++i) worst_abs = std::max(worst_abs, std::abs(quadrature[i] - spectral[i]));
    const double floor = std::max(1e-3 * spectral_max, 1e-6 * field.max_abs());
    for (int i = 0; i < count; ++i)
      worst = std::max(worst, std::abs(quadrature[i] - spectral[i]) / std::max(std::abs(spectral[i]), floor));
    result["spectral_at_points"] = spectral;
    result["max_relative_error"] = worst;
    result["max_abs_difference"] = worst_abs;
    pass = worst <= tol;
  } else {
    pass = true;
  }
  return result;
}

json run_solve(const RunConfig& cfg, bool& pass, std::vector<std::pair<std::string, Field>>& fields) {
  const SolveResult solved = solve(cfg);
  const Trajectory& tr = solved.trajectory;
  json result = {{"contraction", contraction_json(solved.report)},
                 {"steps_completed", tr.steps()},
                 {"t_final", tr.time(tr.steps())},
                 {"M_final", tr.norms.back()},
                 {"series", {{"t", json::array()}, {"norm", tr.norms}, {"running_max", tr.running_max}}}};
  for (std::size_t m = 0; m <= tr.steps(); ++m) result["series"]["t"].push_back(tr.time(m));
  if (get<bool>(cfg.params, "write_trajectory", "/solve") && tr.steps() >= 1)
    fields.emplace_back("trajectory.bin", tr.as_field());
  pass = solved.report.stop_reason == "completed" && !solved.report.blowup_suspected;
  return result;
}

json run_monotone(const RunConfig& cfg, bool& pass) {
  const std::string where = "/verify-monotone";
  json result;
  const Field field = field_from(cfg.params.at("field"), cfg, where + "/field", result);
  const std::vector<double> lambdas = number_list(cfg.params, "lambdas", where);
  Region region;
  region.x1_min = get<double>(cfg.params, "x1_min", where);
  region.x1_max = get<double>(cfg.params, "x1_max", where);
  region.m_first = get<int>(cfg.params, "m_first", where);
  const int m_last = get<int>(cfg.params, "m_last", where);
  region.m_last = m_last < 0 ? field.grid().Mt : m_last;
  region.required_margin = get<double>(cfg.params, "required_margin", where);
  const MonotonicityReport rep = monotonicity_check(field, lambdas, region);

  json per = json::array();
  for (const auto& l : rep.per_lambda)
    per.push_back({{"lambda", l.lambda}, {"min_margin", l.min_margin}, {"violations", l.violations}, {"pass", l.pass}});
  json sites = json::array();
  for (std::size_t i = 0; i < rep.violation_sites.size() && i < 50; ++i) {
    const auto& v = rep.violation_sites[i];
    sites.push_back({{"x", v.x}, {"t", v.t}, {"lambda", v.lambda}, {"w", v.w}});
  }
  // w_lambda along the x_1 axis (other coordinates at the center node) at the last slice.
  const GridSpec& grid = field.grid();
  json profiles = {{"x1", json::array()}, {"w", json::array()}};
  for (int j = 0; j < grid.N; ++j) profiles["x1"].push_back(grid.x(j));
  for (double lambda : lambdas) {
    const Field w = w_lambda(field, lambda);
    json col = json::array();
    for (int j = 0; j < grid.N; ++j) col.push_back(w.re(grid.Mt, grid.ravel({j, grid.N / 2, grid.N / 2})));
    profiles["w"].push_back({{"lambda", lambda}, {"values", col}});
  }
  result["min_margin"] = rep.min_margin;
  result["per_lambda"] = per;
  result["violation_count"] = rep.violation_sites.size();
  result["violation_sites"] = sites;
  result["profiles"] = profiles;
  result["pass"] = rep.pass();
  pass = rep.pass();
  return result;
}

json run_symmetry(const RunConfig& cfg, bool& pass) {
  const std::string where = "/verify-symmetry";
  json result;
  const Field field = field_from(cfg.params.at("field"), cfg, where + "/field", result);
  const std::string mode = get<std::string>(cfg.params, "mode", where);
  SymmetryMode m;
  if (mode == "even_x1") m = SymmetryMode::even_x1;
  else if (mode == "radial") m = SymmetryMode::radial;
  else throw ConfigError(where + "/mode", "expected even_x1 or radial");
  const SymmetryReport rep = symmetry_check(field, cfg.weight, m, get<double>(cfg.params, "tol", where));
  result["mode"] = mode;
  result["max_deviation"] = rep.max_deviation;
  result["threshold"] = rep.threshold;
  result["weight_consistent"] = rep.weight_consistent;
  result["classes"] = rep.classes;
  result["pass"] = rep.pass;
  pass = rep.pass;
  return result;
}

json run_classify(const RunConfig& cfg) {
  const std::string where = "/classify";
  auto as_text = [&](const std::string& key) {
    const json& v = cfg.params.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long>());
    if (v.is_number()) return format_number(v.get<double>());
    throw ConfigError(where + "/" + key, "expected a number or a rational string such as \"3/2\"");
  };
  CriticalityInput in;
  try {
    in = CriticalityInput::from_strings(get<int>(cfg.params, "n", where), as_text("s"), as_text("alpha"), as_text("r"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(where, e.what());
  }
  const Rational rs = r_star(in.n, in.s, in.alpha);
  return {{"n", in.n},
          {"s", rational_text(in.s)},
          {"alpha", rational_text(in.alpha)},
          {"r", rational_text(in.r)},
          {"r_star", static_cast<double>(rs)},
          {"r_star_exact", rational_text(rs)},
          {"regime", to_string(classify(in))}};
}

json run_rescale(const RunConfig& cfg, bool& pass) {
  const std::string where = "/rescale";
  json result;
  const json& src = cfg.params.at("trajectory");
  Trajectory tr;
  if (src.is_object() && src.value("kind", "") == "solve") {
    const SolveResult solved = solve(cfg);
    result["solver"] = contraction_json(solved.report);
    tr = solved.trajectory;
  } else {
    const Field f = make_field(src, cfg.grid, cfg.seed, where + "/trajectory");
    tr.grid = f.grid();
    tr.dt = f.grid().dt();
    for (int m = 0; m <= f.grid().Mt; ++m) tr.push(f.real_slice(m));
  }
  const std::vector<double> R = number_list(cfg.params, "R", where);
  RescalingParams p;
  p.s = cfg.op.s;
  p.alpha = cfg.weight.exponent;
  p.Cns = cfg.op.Cns;
  RescalingReport rep;
  try {
    rep = rescaling_diagnostic(tr, cfg.weight, cfg.nonlin, R, p);
  } catch (const InvalidArgument& e) {
    throw ConfigError(where, e.what());
  }
  json points = json::array();
  const double identity_tol = get<double>(cfg.params, "identity_tol", where);
  const double slope_tol = get<double>(cfg.params, "slope_tol", where);
  bool identity_ok = true;
  for (const auto& pt : rep.points) {
    points.push_back({{"R", pt.R},
                      {"lhs", pt.lhs},
                      {"rhs", pt.rhs},
                      {"past_correction", pt.past_correction},
                      {"relative_gap", pt.relative_gap},
                      {"coverage", pt.coverage}});
    if (pt.coverage >= 1.0 && !rep.degenerate && pt.relative_gap > identity_tol) identity_ok = false;
  }
  const bool slope_ok = rep.regime != "window" ||
                        std::abs(rep.rhs_slope - rep.predicted_rhs_slope) <= slope_tol * rep.predicted_rhs_slope;
  result["points"] = points;
  result["lhs_slope"] = rep.lhs_slope;
  result["rhs_slope"] = rep.rhs_slope;
  result["predicted_lhs_slope"] = rep.predicted_lhs_slope;
  result["predicted_rhs_slope"] = rep.predicted_rhs_slope;
  result["regime"] = rep.regime;
  result["degenerate"] = rep.degenerate;
  result["insufficient_range"] = rep.insufficient_range;
  result["identity_ok"] = identity_ok;
  result["slope_ok"] = slope_ok;
  pass = identity_ok && slope_ok;
  return result;
}

json run_blowup(const RunConfig& cfg, bool& pass) {
  const std::string where = "/blowup";
  const SolveResult solved = solve(cfg);
  const int window = get<int>(cfg.params, "window", where);
  if (window < 5) throw ConfigError(where + "/window", "window shorter than 5 samples");
  BlowupReport rep;
  std::string monitor_note;
  try {
    rep = blowup_monitor(solved.trajectory, window, get<double>(cfg.params, "cap", where));
  } catch (const InvalidArgument& e) {
    // The solver stopped before enough samples existed for centered differences.
    monitor_note = e.what();
  }
  const std::string expect = get<std::string>(cfg.params, "expect", where);
  const bool suspected = rep.blowup_suspected || solved.report.blowup_suspected;
  if (expect == "any") pass = true;
  else if (expect == "blowup") pass = suspected;
  else if (expect == "bounded") pass = !suspected;
  else throw ConfigError(where + "/expect", "expected any, blowup or bounded");
  return {{"solver", contraction_json(solved.report)},
          {"epsilon_margin", rep.epsilon_margin},
          {"margin_reported", rep.margin_reported},
          {"monitor_blowup_suspected", rep.blowup_suspected},
          {"blowup_suspected", suspected},
          {"t_escape", std::isfinite(rep.t_escape) ? rep.t_escape : solved.report.t_escape},
          {"window", {rep.window_first, rep.window_last}},
          {"M_final", solved.trajectory.norms.back()},
          {"monitor_note", monitor_note},
          {"series", {{"t", rep.t}, {"J", rep.J}, {"Jp", rep.Jp}, {"Jpp", rep.Jpp}, {"margin", rep.margin}}}};
}

json run_barrier(const RunConfig& cfg, bool& pass) {
  const std::string where = "/barrier";
  EigenPair eigen;
  Barrier barrier;
  try {
    eigen = eigen_ball(cfg.op.s, cfg.grid);
    barrier = barrier_field(eigen, get<double>(cfg.params, "R", where), get<double>(cfg.params, "beta", where), cfg.grid);
  } catch (const NumericalError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(where, e.what());
  }
  const BarrierCheck check = check_barrier_bound(barrier, eigen, cfg.op.s, cfg.op.Cns, get<int>(cfg.params, "time_stride", where));
  double vmax = 0.0;
  for (std::size_t node = 0; node < cfg.grid.spatial_size(); ++node)
    vmax = std::max(vmax, barrier.v.re(cfg.grid.Mt, node));
  pass = check.pass;
  return {{"lambda1", eigen.lambda1},
          {"eigen_residual", eigen.residual},
          {"eigen_iterations", eigen.iterations},
          {"C_s", barrier.C_s},
          {"C_T", barrier.C_T},
          {"max_v_at_T", vmax},
          {"identity_gap", std::abs(vmax - (std::pow(cfg.grid.T, barrier.beta) - 1.0))},
          {"points_checked", check.points},
          {"worst_excess", check.worst_excess},
          {"worst_tolerance", check.worst_tolerance},
          {"pass", check.pass}};
}

json run_calibrate(const RunConfig& cfg, bool& pass) {
  const std::string where = "/calibrate";
  CalibrationOptions opt;
  opt.resolution = get<int>(cfg.params, "resolution", where);
  opt.max_residual = get<double>(cfg.params, "max_residual", where);
  const CalibrationResult c = calibrate_Cns(cfg.grid.n, cfg.op.s, opt);
  const double analytic = analytic_Cns(cfg.grid.n, cfg.op.s);
  pass = true;
  return {{"Cns", c.Cns},
          {"analytic_Cns", analytic},
          {"relative_difference", std::abs(c.Cns / analytic - 1.0)},
          {"residual", c.residual},
          {"reference_grid", to_json(c.reference_grid)}};
}

Outcome execute_with_fields(const RunConfig& cfg, std::vector<std::pair<std::string, Field>>& fields) {
  Outcome out;
  bool pass = true;
  json result;
  if (cfg.command == "apply") result = run_apply(cfg, pass);
  else if (cfg.command == "solve") result = run_solve(cfg, pass, fields);
  else if (cfg.command == "verify-monotone") result = run_monotone(cfg, pass);
  else if (cfg.command == "verify-symmetry") result = run_symmetry(cfg, pass);
  else if (cfg.command == "classify") result = run_classify(cfg);
  else if (cfg.command == "rescale") result = run_rescale(cfg, pass);
  else if (cfg.command == "blowup") result = run_blowup(cfg, pass);
  else if (cfg.command == "barrier") result = run_barrier(cfg, pass);
  else if (cfg.command == "calibrate") result = run_calibrate(cfg, pass);
  out.report = {{"command", cfg.command}, {"config", cfg.resolved}, {"result", result}, {"pass", pass}};
  out.exit_code = pass ? exit_pass : exit_numerical_fail;
  return out;
}

}  // namespace

Outcome execute(const RunConfig& config) {
  std::vector<std::pair<std::string, Field>> fields;
  return execute_with_fields(config, fields);
}

int run(const RunConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, Field>> fields;
  Outcome out;
  try {
    out = execute_with_fields(config, fields);
  } catch (const InvalidArgument& e) {
    log << e.what() << '\n';
    out.exit_code = exit_config_error;
    out.report = {{"command", config.command},
                  {"config", config.resolved},
                  {"pass", false},
                  {"error", {{"type", "config"}, {"message", e.what()}}}};
  } catch (const Error& e) {
    log << "numerical failure: " << e.what() << '\n';
    out.exit_code = exit_numerical_fail;
    out.report = {{"command", config.command},
                  {"config", config.resolved},
                  {"pass", false},
                  {"error", {{"type", "numerical"}, {"message", e.what()}}}};
  }
  const std::filesystem::path& dir = config.output_dir;
  write_atomic(dir / "report.json", out.report.dump(2) + "\n");
  if (out.report.contains("result")) write_plot_data(emit_plot_data(out.report), dir);
  for (const auto& [name, field] : fields) write_field(dir / name, field);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const json meta = {{"timestamp", static_cast<long long>(std::time(nullptr))},
                     {"wall_seconds", wall},
                     {"threads", thread_count()},
                     {"exit_code", out.exit_code}};
  write_atomic(dir / "metadata.json", meta.dump(2) + "\n");
  log << config.command << ": " << (out.exit_code == exit_pass ? "pass" : "fail") << " (report in "
      << (dir / "report.json").string() << ")\n";
  return out.exit_code;
}

}  // namespace masterheat::cli
