#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "masterheat/field.hpp"

namespace masterheat {

/// How a field known on [0, T] is continued to t < 0.
struct HistoryPolicy {
  enum class Kind { constant_past, zero_past, periodic, analytic };

  Kind kind = Kind::constant_past;
  /// Only for Kind::analytic: value at spatial node for a time t < 0.
  std::function<double(std::size_t node, double t)> past;

  static HistoryPolicy constant_past() { return {Kind::constant_past, {}}; }
  static HistoryPolicy zero_past() { return {Kind::zero_past, {}}; }
  static HistoryPolicy periodic() { return {Kind::periodic, {}}; }
  static HistoryPolicy analytic(std::function<double(std::size_t, double)> past) {
    return {Kind::analytic, std::move(past)};
  }
};

/// Zero for near_split or far_cut selects the grid default.
struct QuadratureControls {
  /// rho: below this lag the integrand is replaced by its Taylor expansion.
  double near_split = 0.0;
  /// Theta: lags beyond this are handled by the closing tail.
  double far_cut = 0.0;
  int nodes_per_panel = 6;
  /// Gaussian weights below this value are dropped from spatial sums.
  double gaussian_cutoff = 1e-16;

  /// rho = h^2 / 2 and Theta = max(4T, 8).
  static QuadratureControls defaults_for(const GridSpec& grid);
  QuadratureControls resolved(const GridSpec& grid) const;
};

struct OperatorParams {
  double s = 0.5;
  double Cns = 1.0;
  QuadratureControls quad;

  void validate() const;
};

/// (i omega + |xi|^2)^s on the principal branch; (0, 0) maps to 0.
cplx symbol_eval(std::span<const double> xi, double omega, double s);
cplx symbol_eval(double xi_squared, double omega, double s);

/// Space-time Fourier multiplier route. The window [0, T) is treated as one
/// period (slices 0..Mt-1); the returned slice Mt repeats slice 0. At the
/// temporal Nyquist frequency the symbol is averaged over +-omega so real
/// fields stay real. Accepts 0 < s <= 1.
Field apply_spectral(const Field& field, double s);

/// Same route with the time-reversed symbol (-i omega + |xi|^2)^s, i.e. the
/// L2 adjoint of apply_spectral.
Field apply_spectral_adjoint(const Field& field, double s);

/// Spatial multiplier |xi|^{2s} on one slice (periodic box).
std::vector<cplx> frac_laplacian_apply(std::span<const cplx> slice, const GridSpec& grid, double s);
std::vector<double> frac_laplacian_apply(std::span<const double> slice, const GridSpec& grid, double s);
/// Slice-by-slice fractional Laplacian of a whole field.
Field frac_laplacian_apply(const Field& field, double s);

/// Point of evaluation: spatial multi-index and time index on the field grid.
struct GridPoint {
  MultiIndex index{0, 0, 0};
  int m = 0;
};

struct QuadratureResult {
  double value = 0.0;
  /// Magnitude of the second-order Taylor term of the near panel.
  double near_residual = 0.0;
  /// Bound on the part of the far tail that is not integrated exactly.
  double tail_bound = 0.0;

  double tolerance() const { return near_residual + tail_bound; }
};

/// Singular-integral route:
///   C_{n,s} int_0^inf tau^{-1-s} [u(x,t) - (G_tau * u(., t - tau))(x)] dtau * (4 pi)^{n/2}
/// with G_tau the discrete heat kernel. On periodic grids G_tau sums periodic
/// images and is normalized to unit mass; on non-periodic grids the field is
/// taken to vanish outside the box. The field must be real.
QuadratureResult apply_quadrature(const Field& field, const GridPoint& point, const OperatorParams& params,
                                  const HistoryPolicy& history);

/// Evaluates apply_quadrature at many points, in parallel.
std::vector<QuadratureResult> apply_quadrature(const Field& field, std::span<const GridPoint> points,
                                               const OperatorParams& params, const HistoryPolicy& history);

/// Closed-form normalization s / (Gamma(1-s) (4 pi)^{n/2}); used as an oracle for calibration.
double analytic_Cns(int n, double s);

struct CalibrationOptions {
  /// Multiplies the reference grid resolution (N, Mt) and the Gauss nodes.
  int resolution = 1;
  double max_residual = 1e-3;
};

struct CalibrationResult {
  double Cns = 0.0;
  /// Spread of the per-point ratios, relative to their mean.
  double residual = 0.0;
  GridSpec reference_grid;
};

/// Normalization that makes apply_quadrature reproduce symbol_eval on a
/// reference plane wave. Throws NumericalError when the residual exceeds
/// options.max_residual.
CalibrationResult calibrate_Cns(int n, double s, const CalibrationOptions& options = {});

/// Marchaud derivative c_s int_0^inf (g(t) - g(t - tau)) tau^{-1-s} dtau,
/// c_s = s / Gamma(1 - s), of a function defined on the whole line.
double marchaud_apply(const std::function<double(double)>& g, double t, double s);

/// Same derivative of samples g_k = g(k dt), k = 0..size-1, evaluated at
/// t = m dt. History before t = 0 follows the policy (analytic callbacks use node 0).
double marchaud_apply(std::span<const double> samples, double dt, int m, double s, const HistoryPolicy& history);

}  // namespace masterheat
