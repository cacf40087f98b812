#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "masterheat/field.hpp"
#include "masterheat/mild_solver.hpp"
#include "masterheat/specs.hpp"

namespace masterheat {

using Rational = boost::multiprecision::cpp_rational;

/// min{1 + 4 s^2 / n, (n + 2 + 2s - 2 alpha) / (n + 2 - 2s)}.
double r_star(int n, double s, double alpha);
Rational r_star(int n, const Rational& s, const Rational& alpha);

enum class Regime { subcritical, critical, supercritical };
std::string to_string(Regime regime);

struct CriticalityInput {
  int n = 1;
  Rational s{1, 2};
  Rational alpha{0};
  Rational r{2};

  /// Doubles convert exactly (every finite double is a dyadic rational).
  static CriticalityInput from_doubles(int n, double s, double alpha, double r);
  /// Accepts integers, decimals ("0.5") and fractions ("3/2").
  static CriticalityInput from_strings(int n, const std::string& s, const std::string& alpha, const std::string& r);
  void validate() const;
};

Rational parse_rational(const std::string& text);

/// Exact comparison of r with r*; ties are critical.
Regime classify(const CriticalityInput& input);

struct EigenOptions {
  double tol = 1e-6;
  int max_iterations = 200;
  double cg_tol = 1e-12;
  int cg_max_iterations = 20000;
};

/// First eigenpair of the fractional Laplacian on the unit ball with zero exterior values.
struct EigenPair {
  double lambda1 = 0.0;
  /// Spatial slice, exactly zero at nodes with |x| >= 1, max 1.
  std::vector<double> phi;
  GridSpec grid;
  double s = 0.5;
  double residual = 0.0;
  int iterations = 0;
  std::size_t interior_nodes = 0;
};

/// Inverse iteration on the exterior-zero projection of the periodic spectral
/// |xi|^{2s} (s = 1 gives the Dirichlet Laplacian limit). The box must contain B_2(0).
EigenPair eigen_ball(double s, const GridSpec& grid, const EigenOptions& options = {});

struct Barrier {
  Field v{GridSpec{}, FieldKind::real};
  double R = 0.0;
  double beta = 0.0;
  double C_s = 0.0;
  double C_T = 0.0;
  /// phi translated by R e_1 on the spatial grid.
  std::vector<double> phi_R;
};

/// phi_R(x) (t^beta - 1) on [0, T] (T and Mt from `grid`), with C_s the Marchaud
/// derivative of the odd extension of t^beta at t = 1 and C_T = lambda_1 (T^beta - 1) + C_s.
/// beta must be 1/(2k+1) < s; R/h must be an integer and B_1(R e_1) must fit in the box.
Barrier barrier_field(const EigenPair& eigen, double R, double beta, const GridSpec& grid);

/// Values of phi_R(x) (odd t^beta - 1) at negative times, as a quadrature history.
std::function<double(std::size_t, double)> barrier_history(const Barrier& barrier);

struct BarrierCheck {
  double worst_excess = -std::numeric_limits<double>::infinity();
  double worst_tolerance = 0.0;
  std::size_t points = 0;
  bool pass = true;
};

/// Checks (d/dt - Laplacian)^s v <= lambda_1 eta(t) + C_s t^{beta-s} + tolerance on
/// B_1(R e_1) x [1, T] by quadrature with the analytic odd-root history.
BarrierCheck check_barrier_bound(const Barrier& barrier, const EigenPair& eigen, double s, double Cns, int time_stride = 1);

enum class ComparisonStatus { no_admissible_R, comparison_violated, consistent };
std::string to_string(ComparisonStatus status);

struct NonexistenceReport {
  double M = 0.0;
  double T = 0.0;
  double C_s = 0.0;
  double C_T = 0.0;
  double R = std::numeric_limits<double>::quiet_NaN();
  double m_T = std::numeric_limits<double>::quiet_NaN();
  bool window_covers_T = false;
  ComparisonStatus status = ComparisonStatus::no_admissible_R;
  double min_gap = std::numeric_limits<double>::quiet_NaN();
  bool norm_growth = false;
  /// |max phi_R (T^beta - 1) - M|.
  double contradiction_identity_gap = 0.0;
};

struct ProbeParams {
  double s = 0.5;
  double beta = 1.0 / 3.0;
};

NonexistenceReport nonexistence_probe(const WeightSpec& weight, const NonlinearitySpec& nonlin, const Field& u,
                                      const EigenPair& eigen, const ProbeParams& params);

/// Plateau-to-zero quintic smoothstep: 1 for |z| <= 1, 0 for |z| >= 2.
double cutoff(double z);
double cutoff_derivative(double z);
double cutoff_second_derivative(double z);

/// phi_R(x, t) = psi(|x| / R) eta(t / R^{2s}); requires 2R <= L.
Field test_function(double R, double s, const GridSpec& grid);

struct RescalingPoint {
  double R = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Part of lhs coming from the constant past of u.
  double past_correction = 0.0;
  double relative_gap = 0.0;
  /// Fraction of the time support [0, 2 R^{2s}] covered by the trajectory.
  double coverage = 0.0;
};

struct RescalingReport {
  std::vector<RescalingPoint> points;
  double lhs_slope = std::numeric_limits<double>::quiet_NaN();
  double rhs_slope = std::numeric_limits<double>::quiet_NaN();
  double predicted_lhs_slope = 0.0;
  double predicted_rhs_slope = 0.0;
  /// "window" (trajectory shorter than every R^{2s}), "full" (covers every 2 R^{2s}) or "mixed".
  std::string regime;
  bool degenerate = false;
  bool insufficient_range = false;
};

struct RescalingParams {
  double s = 0.5;
  double alpha = 0.0;
  double Cns = 0.0;
  int nodes_per_panel = 8;
};

/// LHS(R) = int int u (d/dt - Laplacian)^s phi_R and RHS(R) = int int a f(u) phi_R over t >= 0.
/// The operator moves onto phi_R as its time-reversed adjoint; the constant past of u
/// contributes an explicit correction so the two sides match for mild solutions.
RescalingReport rescaling_diagnostic(const Trajectory& trajectory, const WeightSpec& weight,
                                     const NonlinearitySpec& nonlin, std::span<const double> R_list,
                                     const RescalingParams& params);

struct BlowupReport {
  std::vector<double> t;
  std::vector<double> J;
  std::vector<double> Jp;
  std::vector<double> Jpp;
  std::vector<double> margin;
  /// Minimum of J J'' / J'^2 - 1 over the tail window (only where J' > 0).
  double epsilon_margin = std::numeric_limits<double>::quiet_NaN();
  bool margin_reported = false;
  bool blowup_suspected = false;
  double t_escape = std::numeric_limits<double>::quiet_NaN();
  int window_first = 0;
  int window_last = 0;
};

/// J = (1/2) int ||u||^2 by cumulative trapezoid, J' = ||u||^2 / 2, J'' by centered
/// differences (endpoints dropped). The tail window holds `window` samples ending
/// before the first norm above `cap`.
BlowupReport blowup_monitor(std::span<const double> norms, double dt, int window, double cap);
BlowupReport blowup_monitor(const Trajectory& trajectory, int window, double cap);

}  // namespace masterheat
