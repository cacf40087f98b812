#pragma once

#include <array>
#include <span>
#include <vector>

namespace masterheat::detail {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Supported sizes: 4..10, 15, 20, 30.
const GaussRule& gauss_rule(int nodes);

/// Integrates f over [a, b] with the mapped rule.
template <class F>
double integrate_panel(const GaussRule& rule, double a, double b, F&& f) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.x.size(); ++k) sum += rule.w[k] * f(mid + half * rule.x[k]);
  return half * sum;
}

/// Five-point stencil with indices into samples 0..last.
struct Stencil {
  std::array<int, 5> index{};
  std::array<double, 5> coef{};
};

/// Fourth-order first derivative at m (coefficients already divided by dt).
/// Periodic data treats sample `last` as a copy of sample 0.
Stencil first_derivative(int m, int last, double dt, bool periodic);

/// Fourth-order periodic second derivative along one axis (divided by h^2).
Stencil second_derivative_periodic(int j, int N, double h);

/// Cubic Lagrange weights for time `time` over samples 0..last spaced dt apart.
struct TimeStencil {
  std::array<int, 4> index{};
  std::array<double, 4> coef{};
};
TimeStencil cubic_in_time(double time, int last, double dt, bool periodic);

/// Panel edges on [start, end]: doubling from start up to the first multiple
/// of dt, then one panel per dt.
std::vector<double> panel_edges(double start, double end, double dt);

/// Edges start, start + w, start + 3w, ... (doubling widths) up to end.
std::vector<double> graded_edges(double start, double end, double first_width);

/// int_theta^inf tau^{-1-s} g(t - tau) dtau for periodic samples g (last == first).
double periodic_history_tail(std::span<const double> g, double dt, double t, double theta, double s, int nodes);

}  // namespace masterheat::detail
