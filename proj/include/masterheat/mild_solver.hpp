#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "masterheat/field.hpp"
#include "masterheat/specs.hpp"

namespace masterheat {

/// Relaxation factor Q(s, a t) = Gamma(s, a t) / Gamma(s) for the spatial mode a = |xi|^2.
double sigma_multiplier(double a, double t, double s);

/// Duhamel kernel t^{s-1} e^{-a t} / Gamma(s); t must be positive.
double kappa_multiplier(double a, double t, double s);

/// Exact integral of kappa over [t0, t1], via regularized incomplete gamma.
double kappa_integral(double a, double t0, double t1, double s);

struct SolverConfig {
  double T = 1.0;
  int Mt = 32;
  double picard_tol = 1e-10;
  int picard_max = 60;
  /// Fixed-point ball radius; zero selects 2 (M + 1) with M the running norm maximum.
  double ball_radius = 0.0;
  bool contraction_report = true;
  double norm_cap = 1e8;
  /// Zero forcing modes with |k| > N/3 on any axis.
  bool dealias = true;

  void validate() const;
};

/// Time-indexed spatial slices on a uniform step, with L2 norms and their running maximum.
struct Trajectory {
  GridSpec grid;
  double dt = 0.0;
  std::vector<std::vector<double>> slices;
  std::vector<double> norms;
  std::vector<double> running_max;

  std::size_t steps() const { return slices.empty() ? 0 : slices.size() - 1; }
  double time(std::size_t m) const { return static_cast<double>(m) * dt; }
  /// Field over the completed steps (at least two).
  Field as_field() const;
  void push(std::vector<double> slice);
};

struct PicardWindow {
  int first_step = 0;
  int last_step = 0;
  int iterations = 0;
  double max_quotient = 0.0;
  bool converged = false;
};

struct ContractionReport {
  std::vector<double> quotients;
  std::vector<PicardWindow> windows;
  /// Largest quotient seen inside converged windows.
  double max_quotient = 0.0;
  double fixed_point_residual = 0.0;
  int iterations = 0;
  bool blowup_suspected = false;
  double t_escape = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;
};

struct SolveResult {
  Trajectory trajectory;
  ContractionReport report;
};

/// Per-mode product-integration stepper for the mild form
///   u_hat(t) = sigma(t) u0_hat + int_0^t kappa(t - tau) g_hat(tau) dtau
/// with g piecewise linear between time nodes.
class DuhamelPropagator {
 public:
  DuhamelPropagator(const GridSpec& grid, double s, double dt, int max_steps);

  const GridSpec& grid() const { return grid_; }
  double s() const { return s_; }
  double dt() const { return dt_; }
  int max_steps() const { return max_steps_; }
  std::size_t modes() const { return mode_class_.size(); }

  /// Spectral coefficients of a real slice.
  std::vector<cplx> forward(std::span<const double> slice) const;
  std::vector<double> backward(std::span<const cplx> spectrum) const;
  void dealias(std::span<cplx> spectrum) const;

  /// out += sigma(t_m) u0_hat.
  void add_relaxation(std::span<cplx> out, std::span<const cplx> u0_hat, int m) const;
  /// out += (coefficient of g_hat[j] in u_hat[m]) * g_j.
  void accumulate(std::span<cplx> out, std::span<const cplx> g_j, int m, int j) const;

  /// u_hat at step m from u0_hat and forcing spectra g_hat[0..m].
  std::vector<cplx> step(std::span<const cplx> u0_hat, std::span<const std::vector<cplx>> g_hat, int m) const;

  double sigma(std::size_t mode, int m) const;
  /// Coefficient of g_hat[j] in u_hat[m].
  double weight(std::size_t mode, int m, int j) const;

 private:
  GridSpec grid_;
  double s_;
  double dt_;
  int max_steps_;
  std::vector<std::size_t> mode_class_;
  std::vector<double> class_a_;
  std::vector<bool> keep_;
  /// Per class: sigma[m], c0[l], c1[l].
  std::vector<std::vector<double>> sigma_, c0_, c1_;
};

/// u at time index m from the forcing slices at t_0..t_m (step grid.dt()).
std::vector<double> duhamel_step(std::span<const std::vector<double>> source_history, std::span<const double> u0,
                                 const GridSpec& grid, double s);

/// Full mild trajectory of a prescribed forcing Field (time step of its grid).
Trajectory duhamel_trajectory(const Field& source, std::span<const double> u0, double s);

/// Picard iteration for (d/dt - Laplacian)^s u = a(x) f(u) + F(x, t) in mild form, on
/// windows that shrink on failure. `forcing`, if given, must share the spatial grid and
/// carry config.Mt steps over config.T.
SolveResult picard_solve(std::span<const double> u0, const GridSpec& grid, const WeightSpec& weight,
                         const NonlinearitySpec& nonlin, double s, const SolverConfig& config,
                         const Field* forcing = nullptr);

/// beta = n (1 - 1/r) / (4 s).
double decay_exponent(int n, double s, double r);

struct AprioriReport {
  double fitted_C = 0.0;
  bool holds = true;
  /// s - beta r <= 0: the Volterra bound loses its Gronwall closure.
  bool critical_flag = false;
  double s_minus_beta_r = 0.0;
  std::vector<double> times;
  std::vector<double> M;
  std::vector<double> bound;
};

/// Checks M(t) <= ||u0|| + C int_0^t (t - tau)^{s-1} (1 + tau^{-beta} M(tau)^r) dtau,
/// with C fitted on the first half of the trajectory.
AprioriReport apriori_monitor(const Trajectory& trajectory, double s, double r, double beta);

/// Least-squares slope of log |u_hat| against log |k| over the resolved shells of a slice.
double spectral_decay_rate(std::span<const double> slice, const GridSpec& grid);

}  // namespace masterheat
