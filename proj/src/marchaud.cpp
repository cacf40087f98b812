#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "masterheat/error.hpp"
#include "masterheat/operator.hpp"
#include "numerics.hpp"

namespace masterheat {

namespace {

void check_order(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("marchaud_apply: s must lie in (0, 1)");
}

double marchaud_constant(double s) { return s / boost::math::tgamma(1.0 - s); }

}  // namespace

double marchaud_apply(const std::function<double(double)>& g, double t, double s) {
  check_order(s);
  const double rho = 1e-4 * std::max(1.0, std::abs(t));
  const double g0 = g(t);
  const double g1 = g(t - rho);
  const double g2 = g(t - 2.0 * rho);
  const double dg = (3.0 * g0 - 4.0 * g1 + g2) / (2.0 * rho);
  const double d2g = (g0 - 2.0 * g1 + g2) / (rho * rho);
  double total = dg * std::pow(rho, 1.0 - s) / (1.0 - s) - d2g * std::pow(rho, 2.0 - s) / (2.0 * (2.0 - s));

  auto integrand = [&](double tau) { return (g0 - g(t - tau)) * std::pow(tau, -1.0 - s); };
  constexpr double tol = 1e-10;
  boost::math::quadrature::tanh_sinh<double> finite_rule;
  boost::math::quadrature::exp_sinh<double> infinite_rule;
  double lower = rho;
  for (double edge : {t, std::max(t, rho) + 1.0}) {
    if (edge <= lower) continue;
    total += finite_rule.integrate(integrand, lower, edge, tol);
    lower = edge;
  }
  total += infinite_rule.integrate(integrand, lower, std::numeric_limits<double>::infinity(), tol);
  const double result = marchaud_constant(s) * total;
  if (!std::isfinite(result)) throw NumericalError("marchaud_apply: non-finite result");
  return result;
}

double marchaud_apply(std::span<const double> samples, double dt, int m, double s, const HistoryPolicy& history) {
  check_order(s);
  if (samples.size() < 5)
    throw InvalidArgument("marchaud_apply: insufficient history samples (" + std::to_string(samples.size()) +
                          " < 5)");
  if (!(dt > 0.0)) throw InvalidArgument("marchaud_apply: dt must be positive");
  const int last = static_cast<int>(samples.size()) - 1;
  if (m < 0 || m > last) throw InvalidArgument("marchaud_apply: time index outside the samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw NumericalError("marchaud_apply: non-finite sample");

  using Kind = HistoryPolicy::Kind;
  const bool periodic = history.kind == Kind::periodic;
  if (history.kind == Kind::analytic && !history.past)
    throw InvalidArgument("marchaud_apply: analytic history without a callback");
  const double t = m * dt;
  const double gm = samples[m];
  const double rho = dt / 16.0;
  constexpr int nodes = 8;
  const detail::GaussRule& rule = detail::gauss_rule(nodes);

  auto derivative = [&](int k) {
    const detail::Stencil st = detail::first_derivative(k, last, dt, periodic);
    double d = 0.0;
    for (int q = 0; q < 5; ++q) d += st.coef[q] * samples[st.index[q]];
    return d;
  };
  const detail::Stencil st = detail::first_derivative(m, last, dt, periodic);
  double d2g = 0.0;
  for (int q = 0; q < 5; ++q) d2g += st.coef[q] * derivative(st.index[q]);
  double total = derivative(m) * std::pow(rho, 1.0 - s) / (1.0 - s) - d2g * std::pow(rho, 2.0 - s) / (2.0 * (2.0 - s));

  auto value_at = [&](double time) {
    if (time >= -1e-12 * dt || periodic) {
      const detail::TimeStencil ts = detail::cubic_in_time(periodic ? time : std::max(time, 0.0), last, dt, periodic);
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += ts.coef[k] * samples[ts.index[k]];
      return v;
    }
    switch (history.kind) {
      case Kind::zero_past: return 0.0;
      case Kind::constant_past: return samples[0];
      case Kind::analytic: return history.past(0, time);
      case Kind::periodic: break;
    }
    return 0.0;
  };
  auto integrate = [&](const std::vector<double>& edges) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
      sum += detail::integrate_panel(rule, edges[k], edges[k + 1],
                                     [&](double tau) { return (gm - value_at(t - tau)) * std::pow(tau, -1.0 - s); });
    return sum;
  };

  const double history_start = std::max(t, rho);
  switch (history.kind) {
    case Kind::zero_past:
      if (m == 0 && gm != 0.0)
        throw NumericalError("marchaud_apply: zero-past history makes the derivative singular at t = 0");
      total += integrate(detail::panel_edges(rho, t, dt)) + gm * std::pow(history_start, -s) / s;
      break;
    case Kind::constant_past:
      total += integrate(detail::panel_edges(rho, t, dt)) + (gm - samples[0]) * std::pow(history_start, -s) / s;
      break;
    case Kind::periodic: {
      const double end = std::max(t, dt);
      total += integrate(detail::panel_edges(rho, end, dt));
      total += gm * std::pow(end, -s) / s - detail::periodic_history_tail(samples, dt, t, end, s, nodes);
      break;
    }
    case Kind::analytic: {
      total += integrate(detail::panel_edges(rho, t, dt));
      const double theta = 1e4 * std::max(last * dt, 1.0);
      total += integrate(detail::graded_edges(history_start, theta, dt / 256.0));
      total += (gm - value_at(t - theta)) * std::pow(theta, -s) / s;
      break;
    }
  }
  const double result = marchaud_constant(s) * total;
  if (!std::isfinite(result)) throw NumericalError("marchaud_apply: non-finite result");
  return result;
}

}  // namespace masterheat
