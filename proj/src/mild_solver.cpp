#include "masterheat/mild_solver.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "masterheat/error.hpp"
#include "masterheat/fft.hpp"

namespace masterheat {

namespace {

void check_order(double s, const char* who) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument(std::string(who) + ": s must lie in (0, 1]");
}

/// int_{x0}^{x1} sigma^{p-1} e^{-a sigma} d sigma.
double moment(double a, double p, double x0, double x1) {
  if (a == 0.0) return (std::pow(x1, p) - std::pow(x0, p)) / p;
  const double scale = boost::math::tgamma(p) * std::pow(a, -p);
  if (a * x0 > p) return scale * (boost::math::gamma_q(p, a * x0) - boost::math::gamma_q(p, a * x1));
  return scale * (boost::math::gamma_p(p, a * x1) - boost::math::gamma_p(p, a * x0));
}

}  // namespace

double sigma_multiplier(double a, double t, double s) {
  check_order(s, "sigma_multiplier");
  if (a < 0.0 || t < 0.0) throw InvalidArgument("sigma_multiplier: a and t must be non-negative");
  if (a == 0.0 || t == 0.0) return 1.0;
  return boost::math::gamma_q(s, a * t);
}

double kappa_multiplier(double a, double t, double s) {
  check_order(s, "kappa_multiplier");
  if (a < 0.0) throw InvalidArgument("kappa_multiplier: a must be non-negative");
  if (!(t > 0.0)) throw InvalidArgument("kappa_multiplier: kernel is singular at t = 0");
  return std::pow(t, s - 1.0) * std::exp(-a * t) / boost::math::tgamma(s);
}

double kappa_integral(double a, double t0, double t1, double s) {
  check_order(s, "kappa_integral");
  if (a < 0.0 || t0 < 0.0 || t1 < t0) throw InvalidArgument("kappa_integral: need a >= 0 and 0 <= t0 <= t1");
  return moment(a, s, t0, t1) / boost::math::tgamma(s);
}

void SolverConfig::validate() const {
  if (!(T > 0.0)) throw InvalidArgument("solver: T must be positive");
  if (Mt < 1) throw InvalidArgument("solver: Mt must be at least 1");
  if (!(picard_tol > 0.0)) throw InvalidArgument("solver: picard_tol must be positive");
  if (picard_max < 1) throw InvalidArgument("solver: picard_max must be at least 1");
  if (ball_radius < 0.0) throw InvalidArgument("solver: ball_radius must be non-negative");
  if (!(norm_cap > 0.0)) throw InvalidArgument("solver: norm_cap must be positive");
}

void Trajectory::push(std::vector<double> slice) {
  const double norm = l2_norm(slice, grid);
  norms.push_back(norm);
  running_max.push_back(running_max.empty() ? norm : std::max(running_max.back(), norm));
  slices.push_back(std::move(slice));
}

Field Trajectory::as_field() const {
  if (steps() < 2) throw InvalidArgument("trajectory: need at least two steps for a Field");
  const GridSpec g = make_grid(grid.n, grid.L, grid.N, dt * static_cast<double>(steps()), static_cast<int>(steps()),
                               grid.periodic);
  std::vector<double> values;
  values.reserve(g.size());
  for (const auto& slice : slices) values.insert(values.end(), slice.begin(), slice.end());
  return Field::from_real(g, std::move(values));
}

DuhamelPropagator::DuhamelPropagator(const GridSpec& grid, double s, double dt, int max_steps)
    : grid_(grid), s_(s), dt_(dt), max_steps_(max_steps) {
  check_order(s, "DuhamelPropagator");
  grid.validate();
  if (!(dt > 0.0)) throw InvalidArgument("DuhamelPropagator: dt must be positive");
  if (max_steps < 1) throw InvalidArgument("DuhamelPropagator: max_steps must be positive");

  const std::size_t spatial = grid.spatial_size();
  mode_class_.resize(spatial);
  keep_.resize(spatial);
  std::map<long, std::size_t> classes;
  const double unit = std::numbers::pi / grid.L;
  for (std::size_t node = 0; node < spatial; ++node) {
    const MultiIndex k = grid.unravel(node);
    long key = 0;
    bool keep = true;
    for (int axis = 0; axis < grid.n; ++axis) {
      const long signed_k = k[axis] < grid.N / 2 ? k[axis] : k[axis] - grid.N;
      key += signed_k * signed_k;
      if (3 * std::abs(signed_k) > grid.N) keep = false;
    }
    keep_[node] = keep;
    auto [it, inserted] = classes.emplace(key, class_a_.size());
    if (inserted) class_a_.push_back(unit * unit * static_cast<double>(key));
    mode_class_[node] = it->second;
  }

  const double gs = boost::math::tgamma(s);
  sigma_.resize(class_a_.size());
  c0_.resize(class_a_.size());
  c1_.resize(class_a_.size());
  for (std::size_t c = 0; c < class_a_.size(); ++c) {
    const double a = class_a_[c];
    auto& sig = sigma_[c];
    auto& c0 = c0_[c];
    auto& c1 = c1_[c];
    sig.resize(max_steps + 1);
    c0.assign(max_steps + 1, 0.0);
    c1.assign(max_steps + 1, 0.0);
    for (int m = 0; m <= max_steps; ++m) sig[m] = sigma_multiplier(a, m * dt, s);
    for (int l = 1; l <= max_steps; ++l) {
      const double x0 = (l - 1) * dt;
      const double x1 = l * dt;
      const double i0 = moment(a, s, x0, x1);
      const double i1 = moment(a, s + 1.0, x0, x1);
      c0[l] = (i1 - x0 * i0) / (gs * dt);
      c1[l] = (x1 * i0 - i1) / (gs * dt);
    }
  }
}

std::vector<cplx> DuhamelPropagator::forward(std::span<const double> slice) const {
  std::vector<cplx> data(slice.begin(), slice.end());
  Fft(std::vector<int>(grid_.n, grid_.N)).forward(data);
  return data;
}

std::vector<double> DuhamelPropagator::backward(std::span<const cplx> spectrum) const {
  std::vector<cplx> data(spectrum.begin(), spectrum.end());
  Fft(std::vector<int>(grid_.n, grid_.N)).backward(data);
  std::vector<double> out(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) out[k] = data[k].real();
  return out;
}

void DuhamelPropagator::dealias(std::span<cplx> spectrum) const {
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    if (!keep_[k]) spectrum[k] = 0.0;
}

double DuhamelPropagator::sigma(std::size_t mode, int m) const { return sigma_[mode_class_[mode]][m]; }

double DuhamelPropagator::weight(std::size_t mode, int m, int j) const {
  if (m < 1 || j < 0 || j > m) return 0.0;
  const std::size_t c = mode_class_[mode];
  if (j == 0) return c0_[c][m];
  const int d = m - j;
  return d == 0 ? c1_[c][1] : c0_[c][d] + c1_[c][d + 1];
}

void DuhamelPropagator::add_relaxation(std::span<cplx> out, std::span<const cplx> u0_hat, int m) const {
  if (m < 0 || m > max_steps_) throw InvalidArgument("DuhamelPropagator: step out of range");
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += sigma_[mode_class_[k]][m] * u0_hat[k];
}

void DuhamelPropagator::accumulate(std::span<cplx> out, std::span<const cplx> g_j, int m, int j) const {
  if (m < 1 || m > max_steps_ || j < 0 || j > m) throw InvalidArgument("DuhamelPropagator: step out of range");
  std::vector<double> w(class_a_.size());
  const int d = m - j;
  for (std::size_t c = 0; c < class_a_.size(); ++c)
    w[c] = j == 0 ? c0_[c][m] : (d == 0 ? c1_[c][1] : c0_[c][d] + c1_[c][d + 1]);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += w[mode_class_[k]] * g_j[k];
}

std::vector<cplx> DuhamelPropagator::step(std::span<const cplx> u0_hat, std::span<const std::vector<cplx>> g_hat,
                                          int m) const {
  if (static_cast<int>(g_hat.size()) < m + 1) throw InvalidArgument("DuhamelPropagator: forcing history too short");
  std::vector<cplx> out(u0_hat.size());
  add_relaxation(out, u0_hat, m);
  for (int j = 0; m > 0 && j <= m; ++j) accumulate(out, g_hat[j], m, j);
  return out;
}

namespace {

void check_slice(std::span<const double> slice, const GridSpec& grid, const char* who) {
  if (slice.size() != grid.spatial_size()) throw InvalidArgument(std::string(who) + ": slice shape mismatch");
  for (double v : slice)
    if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": non-finite source values");
}

}  // namespace

std::vector<double> duhamel_step(std::span<const std::vector<double>> source_history, std::span<const double> u0,
                                 const GridSpec& grid, double s) {
  if (source_history.empty()) throw InvalidArgument("duhamel_step: empty source history");
  check_slice(u0, grid, "duhamel_step");
  const int m = static_cast<int>(source_history.size()) - 1;
  DuhamelPropagator prop(grid, s, grid.dt(), std::max(m, 1));
  std::vector<std::vector<cplx>> g_hat;
  for (const auto& g : source_history) {
    check_slice(g, grid, "duhamel_step");
    g_hat.push_back(prop.forward(g));
  }
  return prop.backward(prop.step(prop.forward(u0), g_hat, m));
}

Trajectory duhamel_trajectory(const Field& source, std::span<const double> u0, double s) {
  const GridSpec& grid = source.grid();
  check_slice(u0, grid, "duhamel_trajectory");
  if (!source.is_real()) throw InvalidArgument("duhamel_trajectory: source must be real");
  DuhamelPropagator prop(grid, s, grid.dt(), grid.Mt);
  std::vector<std::vector<cplx>> g_hat;
  for (int m = 0; m <= grid.Mt; ++m) g_hat.push_back(prop.forward(source.real_slice(m)));
  const auto u0_hat = prop.forward(u0);
  Trajectory traj{grid, grid.dt(), {}, {}, {}};
  traj.push(std::vector<double>(u0.begin(), u0.end()));
  for (int m = 1; m <= grid.Mt; ++m) traj.push(prop.backward(prop.step(u0_hat, g_hat, m)));
  return traj;
}

namespace {

class PicardDriver {
 public:
  PicardDriver(std::span<const double> u0, const GridSpec& grid, const WeightSpec& weight,
               const NonlinearitySpec& nonlin, double s, const SolverConfig& config, const Field* forcing)
      : grid_(grid),
        nonlin_(nonlin),
        config_(config),
        forcing_(forcing),
        prop_(grid, s, config.T / config.Mt, config.Mt) {
    const std::size_t spatial = grid.spatial_size();
    weight_values_.resize(spatial);
    for (std::size_t node = 0; node < spatial; ++node) weight_values_[node] = weight(grid.coords(node));
    u0_hat_ = prop_.forward(u0);
    result_.trajectory = Trajectory{make_grid(grid.n, grid.L, grid.N, config.T, config.Mt, grid.periodic),
                                    config.T / config.Mt, {}, {}, {}};
    result_.trajectory.push(std::vector<double>(u0.begin(), u0.end()));
    g_hat_.push_back(forcing_spectrum(result_.trajectory.slices[0], 0));
  }

  SolveResult run() {
    int done = 0;
    const int initial = config_.Mt;
    int window = initial;
    ContractionReport& rep = result_.report;
    while (done < config_.Mt) {
      const int len = std::min(window, config_.Mt - done);
      PicardWindow record{done + 1, done + len, 0, 0.0, false};
      std::string reason;
      std::vector<std::vector<double>> slices;
      std::vector<std::vector<cplx>> spectra;
      record.converged = solve_window(done, len, record, reason, slices, spectra);
      rep.windows.push_back(record);
      rep.iterations += record.iterations;
      if (record.converged) {
        rep.max_quotient = std::max(rep.max_quotient, record.max_quotient);
        for (int k = 0; k < len; ++k) {
          result_.trajectory.push(std::move(slices[k]));
          g_hat_.push_back(std::move(spectra[k]));
        }
        done += len;
        window = std::min(initial, 2 * len);
        continue;
      }
      if (len == 1) {
        rep.blowup_suspected = true;
        rep.t_escape = (done + 1) * prop_.dt();
        rep.stop_reason = reason;
        break;
      }
      window = std::max(1, len / 2);
    }
    if (rep.stop_reason.empty()) rep.stop_reason = "completed";
    return std::move(result_);
  }

 private:
  std::vector<cplx> forcing_spectrum(const std::vector<double>& u, int m) const {
    std::vector<double> g(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      g[k] = weight_values_[k] * nonlin_(u[k]);
      if (forcing_) g[k] += forcing_->re(m, k);
    }
    for (double v : g)
      if (!std::isfinite(v)) throw NumericalError("picard_solve: non-finite forcing");
    auto spectrum = prop_.forward(g);
    if (config_.dealias) prop_.dealias(spectrum);
    return spectrum;
  }

  bool solve_window(int m0, int len, PicardWindow& record, std::string& reason,
                    std::vector<std::vector<double>>& slices, std::vector<std::vector<cplx>>& spectra) {
    const std::size_t spatial = grid_.spatial_size();
    const double radius =
        config_.ball_radius > 0.0 ? config_.ball_radius : 2.0 * (result_.trajectory.running_max.back() + 1.0);

    std::vector<std::vector<cplx>> known(len, std::vector<cplx>(spatial));
    for (int k = 0; k < len; ++k) {
      const int m = m0 + 1 + k;
      prop_.add_relaxation(known[k], u0_hat_, m);
      for (int j = 0; j <= m0; ++j) prop_.accumulate(known[k], g_hat_[j], m, j);
    }
    auto apply = [&](const std::vector<std::vector<cplx>>& g_window) {
      std::vector<std::vector<double>> out(len);
      for (int k = 0; k < len; ++k) {
        const int m = m0 + 1 + k;
        std::vector<cplx> u_hat = known[k];
        for (int q = 0; q <= k; ++q) prop_.accumulate(u_hat, g_window[q], m, m0 + 1 + q);
        out[k] = prop_.backward(u_hat);
      }
      return out;
    };
    auto distance = [&](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
      double d = 0.0;
      for (int k = 0; k < len; ++k) {
        std::vector<double> diff(spatial);
        for (std::size_t q = 0; q < spatial; ++q) diff[q] = a[k][q] - b[k][q];
        d = std::max(d, l2_norm(diff, grid_));
      }
      return d;
    };
    auto admissible = [&](const std::vector<std::vector<double>>& u) {
      for (const auto& slice : u) {
        for (double v : slice)
          if (!std::isfinite(v)) {
            reason = "non-finite iterate";
            return false;
          }
        const double norm = l2_norm(slice, grid_);
        if (norm > config_.norm_cap) {
          reason = "norm cap exceeded";
          return false;
        }
        if (norm > radius) {
          reason = "fixed-point ball exceeded";
          return false;
        }
      }
      return true;
    };

    std::vector<std::vector<cplx>> g_window(len, g_hat_[m0]);
    std::vector<std::vector<double>> u = apply(g_window);
    if (!admissible(u)) return false;

    double previous = 0.0;
    int expanding = 0;
    for (int it = 1; it <= config_.picard_max; ++it) {
      record.iterations = it;
      try {
        for (int k = 0; k < len; ++k) g_window[k] = forcing_spectrum(u[k], m0 + 1 + k);
      } catch (const NumericalError&) {
        reason = "non-finite forcing";
        return false;
      }
      std::vector<std::vector<double>> next = apply(g_window);
      if (!admissible(next)) return false;
      const double d = distance(next, u);
      if (it > 1 && previous > 0.0) {
        const double q = d / previous;
        if (config_.contraction_report) result_.report.quotients.push_back(q);
        record.max_quotient = std::max(record.max_quotient, q);
        expanding = q >= 1.0 ? expanding + 1 : 0;
        if (expanding >= 2) {
          reason = "contraction quotient >= 1";
          return false;
        }
      }
      previous = d;
      u = std::move(next);
      if (d < config_.picard_tol) {
        for (int k = 0; k < len; ++k) g_window[k] = forcing_spectrum(u[k], m0 + 1 + k);
        const auto check = apply(g_window);
        result_.report.fixed_point_residual = std::max(result_.report.fixed_point_residual, distance(check, u));
        slices = std::move(u);
        spectra = std::move(g_window);
        return true;
      }
    }
    reason = "picard_max reached";
    return false;
  }

  const GridSpec& grid_;
  const NonlinearitySpec& nonlin_;
  const SolverConfig& config_;
  const Field* forcing_;
  DuhamelPropagator prop_;
  std::vector<double> weight_values_;
  std::vector<cplx> u0_hat_;
  std::vector<std::vector<cplx>> g_hat_;
  SolveResult result_;
};

}  // namespace

SolveResult picard_solve(std::span<const double> u0, const GridSpec& grid, const WeightSpec& weight,
                         const NonlinearitySpec& nonlin, double s, const SolverConfig& config, const Field* forcing) {
  config.validate();
  grid.validate();
  weight.validate();
  nonlin.validate();
  check_order(s, "picard_solve");
  check_slice(u0, grid, "picard_solve");
  if (forcing) {
    const GridSpec& fg = forcing->grid();
    if (!fg.same_space(grid) || fg.Mt != config.Mt || std::abs(fg.T - config.T) > 1e-12 * config.T)
      throw InvalidArgument("picard_solve: forcing grid does not match the solver grid");
    if (!forcing->is_real()) throw InvalidArgument("picard_solve: forcing must be real");
  }
  return PicardDriver(u0, grid, weight, nonlin, s, config, forcing).run();
}

double decay_exponent(int n, double s, double r) {
  if (r <= 0.0) throw InvalidArgument("decay_exponent: r must be positive");
  check_order(s, "decay_exponent");
  return n * (1.0 - 1.0 / r) / (4.0 * s);
}

AprioriReport apriori_monitor(const Trajectory& trajectory, double s, double r, double beta) {
  if (trajectory.slices.empty()) throw InvalidArgument("apriori_monitor: empty trajectory");
  check_order(s, "apriori_monitor");
  AprioriReport rep;
  rep.s_minus_beta_r = s - beta * r;
  rep.critical_flag = rep.s_minus_beta_r <= 0.0;
  const std::size_t steps = trajectory.steps();
  const double dt = trajectory.dt;
  const double M0 = trajectory.norms[0];

  std::vector<double> I(steps + 1, 0.0);
  const bool integrable = beta < 1.0;
  const double B = integrable ? boost::math::beta(1.0 - beta, s) : 0.0;
  for (std::size_t m = 1; m <= steps; ++m) {
    if (!integrable) {
      I[m] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double t = m * dt;
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = j * dt;
      const double b = (j + 1) * dt;
      sum += (std::pow(t - a, s) - std::pow(t - b, s)) / s;
      const double weight = std::pow(t, s - beta) * B *
                            (boost::math::ibeta(1.0 - beta, s, b / t) - boost::math::ibeta(1.0 - beta, s, a / t));
      sum += weight * std::pow(trajectory.running_max[j + 1], r);
    }
    I[m] = sum;
  }

  double C = 0.0;
  for (std::size_t m = 1; m <= std::max<std::size_t>(1, steps / 2) && m <= steps; ++m)
    if (I[m] > 0.0 && std::isfinite(I[m])) C = std::max(C, (trajectory.running_max[m] - M0) / I[m]);
  rep.fitted_C = C;
  for (std::size_t m = 0; m <= steps; ++m) {
    const double bound = m == 0 ? M0 : (C == 0.0 ? M0 : M0 + C * I[m]);
    rep.times.push_back(m * dt);
    rep.M.push_back(trajectory.running_max[m]);
    rep.bound.push_back(bound);
    if (trajectory.running_max[m] > bound + 1e-12 * std::max(1.0, trajectory.running_max[m])) rep.holds = false;
  }
  return rep;
}

double spectral_decay_rate(std::span<const double> slice, const GridSpec& grid) {
  if (slice.size() != grid.spatial_size()) throw InvalidArgument("spectral_decay_rate: slice shape mismatch");
  std::vector<cplx> data(slice.begin(), slice.end());
  Fft(std::vector<int>(grid.n, grid.N)).forward(data);
  const int shells = grid.N / 3;
  std::vector<double> amplitude(shells + 1, 0.0);
  for (std::size_t node = 0; node < data.size(); ++node) {
    const MultiIndex k = grid.unravel(node);
    double r2 = 0.0;
    for (int axis = 0; axis < grid.n; ++axis) {
      const int signed_k = k[axis] < grid.N / 2 ? k[axis] : k[axis] - grid.N;
      r2 += static_cast<double>(signed_k) * signed_k;
    }
    const int shell = static_cast<int>(std::lround(std::sqrt(r2)));
    if (shell >= 1 && shell <= shells) amplitude[shell] = std::max(amplitude[shell], std::abs(data[node]));
  }
  const double peak = *std::max_element(amplitude.begin(), amplitude.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int shell = 1; shell <= shells; ++shell) {
    if (amplitude[shell] <= 1e-14 * peak || peak == 0.0) continue;
    const double x = std::log(static_cast<double>(shell));
    const double y = std::log(amplitude[shell]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return -std::numeric_limits<double>::infinity();
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace masterheat
