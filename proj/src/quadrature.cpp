#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "masterheat/error.hpp"
#include "masterheat/fft.hpp"
#include "masterheat/operator.hpp"
#include "masterheat/parallel.hpp"
#include "numerics.hpp"

namespace masterheat {

QuadratureControls QuadratureControls::defaults_for(const GridSpec& grid) {
  QuadratureControls c;
  c.near_split = 0.5 * grid.h() * grid.h();
  c.far_cut = std::max(4.0 * grid.T, 8.0);
  return c;
}

QuadratureControls QuadratureControls::resolved(const GridSpec& grid) const {
  const QuadratureControls d = defaults_for(grid);
  QuadratureControls c = *this;
  if (c.near_split <= 0.0) c.near_split = d.near_split;
  if (c.far_cut <= 0.0) c.far_cut = d.far_cut;
  return c;
}

void OperatorParams::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("operator: s must lie in (0, 1), got " + std::to_string(s));
  if (!(Cns > 0.0) || !std::isfinite(Cns)) throw InvalidArgument("operator: Cns must be positive and finite");
  if (quad.nodes_per_panel < 4) throw InvalidArgument("operator: nodes_per_panel must be at least 4");
  if (quad.near_split > 0.0 && quad.far_cut > 0.0 && !(quad.near_split < quad.far_cut))
    throw InvalidArgument("operator: near_split must be smaller than far_cut");
  if (!(quad.gaussian_cutoff > 0.0 && quad.gaussian_cutoff < 1.0))
    throw InvalidArgument("operator: gaussian_cutoff must lie in (0, 1)");
}

double analytic_Cns(int n, double s) {
  return s / (boost::math::tgamma(1.0 - s) * std::pow(4.0 * std::numbers::pi, 0.5 * n));
}

namespace detail {

std::vector<double> panel_edges(double start, double end, double dt) {
  std::vector<double> e;
  if (!(end > start)) return e;
  e.push_back(start);
  const double first_aligned = (std::floor(start / dt * (1.0 + 1e-12)) + 1.0) * dt;
  while (2.0 * e.back() < std::min(first_aligned, end)) e.push_back(2.0 * e.back());
  for (long k = 0;; ++k) {
    const double edge = first_aligned + static_cast<double>(k) * dt;
    if (edge >= end - 1e-9 * dt) {
      e.push_back(end);
      break;
    }
    e.push_back(edge);
  }
  return e;
}

std::vector<double> graded_edges(double start, double end, double first_width) {
  std::vector<double> e{start};
  double width = first_width;
  while (e.back() < end) {
    e.push_back(std::min(e.back() + width, end));
    width *= 2.0;
  }
  return e;
}

double periodic_history_tail(std::span<const double> g, double dt, double t, double theta, double s, int nodes) {
  const int period_samples = static_cast<int>(g.size()) - 1;
  const double P = period_samples * dt;
  constexpr int explicit_terms = 8;
  auto weight = [&](double sigma) {
    const double A = theta + sigma;
    double sum = 0.0;
    for (int k = 0; k < explicit_terms; ++k) sum += std::pow(A + k * P, -1.0 - s);
    const double B = A + explicit_terms * P;
    sum += std::pow(B, -s) / (s * P);
    sum += 0.5 * std::pow(B, -1.0 - s);
    sum += (1.0 + s) * P * std::pow(B, -2.0 - s) / 12.0;
    sum -= (1.0 + s) * (2.0 + s) * (3.0 + s) * P * P * P * std::pow(B, -4.0 - s) / 720.0;
    return sum;
  };
  const GaussRule& rule = gauss_rule(nodes);
  double total = 0.0;
  for (int j = 0; j < period_samples; ++j) {
    total += integrate_panel(rule, j * dt, (j + 1) * dt, [&](double sigma) {
      const TimeStencil ts = cubic_in_time(t - theta - sigma, period_samples, dt, true);
      double value = 0.0;
      for (int k = 0; k < 4; ++k) value += ts.coef[k] * g[ts.index[k]];
      return weight(sigma) * value;
    });
  }
  return total;
}

}  // namespace detail

namespace {

struct AxisWeights {
  std::vector<int> index;
  std::vector<double> weight;
};

/// Discrete heat kernel along one axis around index i. Periodic grids sum
/// periodic images and normalize to unit mass; free-space grids keep the
/// sampled Gaussian mass h (4 pi tau)^{-1/2} and drop everything outside the box.
AxisWeights axis_weights(const GridSpec& grid, int i, double tau, double cutoff) {
  const double h = grid.h();
  const double four_tau = 4.0 * tau;
  const double max_exponent = -std::log(cutoff);
  AxisWeights out;
  if (grid.periodic) {
    const double period = 2.0 * grid.L;
    const int images = static_cast<int>(std::ceil(std::sqrt(max_exponent * four_tau) / period)) + 1;
    double total = 0.0;
    for (int j = 0; j < grid.N; ++j) {
      int d = j - i;
      if (d >= grid.N / 2) d -= grid.N;
      if (d < -grid.N / 2) d += grid.N;
      double w = 0.0;
      for (int k = -images; k <= images; ++k) {
        const double z = d * h + k * period;
        const double e = z * z / four_tau;
        if (e <= max_exponent) w += std::exp(-e);
      }
      if (w > 0.0) {
        out.index.push_back(j);
        out.weight.push_back(w);
        total += w;
      }
    }
    for (double& w : out.weight) w /= total;
  } else {
    const double scale = h / std::sqrt(std::numbers::pi * four_tau);
    for (int j = 0; j < grid.N; ++j) {
      const double z = (j - i) * h;
      const double e = z * z / four_tau;
      if (e <= max_exponent) {
        out.index.push_back(j);
        out.weight.push_back(scale * std::exp(-e));
      }
    }
  }
  return out;
}

using Weights = std::array<AxisWeights, 3>;

class PointEvaluator {
 public:
  PointEvaluator(const Field& field, const GridPoint& point, const OperatorParams& params,
                 const HistoryPolicy& history, double field_scale)
      : field_(field),
        grid_(field.grid()),
        point_(point),
        s_(params.s),
        quad_(params.quad.resolved(field.grid())),
        history_(history),
        field_scale_(field_scale),
        node_(grid_.ravel(point.index)),
        t_(grid_.t(point.m)),
        u_(field.re(point.m, node_)),
        periodic_time_(history.kind == HistoryPolicy::Kind::periodic),
        rule_(detail::gauss_rule(quad_.nodes_per_panel)) {}

  QuadratureResult run() {
    const double rho = quad_.near_split;
    const double dt = grid_.dt();
    QuadratureResult result;
    result.value = near_panel(result.near_residual);

    auto integrand = [&](double tau) { return std::pow(tau, -1.0 - s_) * (u_ - smoothed(tau)); };
    auto integrate = [&](const std::vector<double>& edges) {
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        sum += detail::integrate_panel(rule_, edges[k], edges[k + 1], integrand);
      return sum;
    };

    using Kind = HistoryPolicy::Kind;
    const double history_start = std::max(t_, rho);
    switch (history_.kind) {
      case Kind::zero_past:
        if (point_.m == 0 && u_ != 0.0)
          throw NumericalError("apply_quadrature: zero-past history makes the operator singular at t = 0");
        result.value += integrate(detail::panel_edges(rho, t_, dt));
        result.value += u_ * std::pow(history_start, -s_) / s_;
        break;
      case Kind::constant_past:
        result.value += integrate(detail::panel_edges(rho, t_, dt));
        if (grid_.periodic) {
          result.value += u_ * std::pow(history_start, -s_) / s_ - constant_past_history(history_start);
        } else {
          result.value += graded_tail(history_start, integrate, result.tail_bound);
        }
        break;
      case Kind::analytic:
        if (!history_.past) throw InvalidArgument("apply_quadrature: analytic history without a callback");
        result.value += integrate(detail::panel_edges(rho, t_, dt));
        result.value += graded_tail(history_start, integrate, result.tail_bound);
        break;
      case Kind::periodic: {
        const double theta = std::ceil(std::max(quad_.far_cut, history_start) / dt) * dt;
        result.value += integrate(detail::panel_edges(rho, theta, dt));
        std::vector<double> mean(grid_.time_size());
        for (int m = 0; m <= grid_.Mt; ++m) {
          double sum = 0.0;
          for (std::size_t node = 0; node < grid_.spatial_size(); ++node) sum += field_.re(m, node);
          mean[m] = sum / static_cast<double>(grid_.spatial_size());
        }
        const double scale = std::pow(theta, -s_) / s_;
        result.value += u_ * scale - detail::periodic_history_tail(mean, dt, t_, theta, s_, quad_.nodes_per_panel);
        const detail::TimeStencil ts = detail::cubic_in_time(t_ - theta, grid_.Mt, dt, true);
        double mean_at_theta = 0.0;
        for (int k = 0; k < 4; ++k) mean_at_theta += ts.coef[k] * mean[ts.index[k]];
        result.tail_bound = std::abs(smoothed(theta) - mean_at_theta) * scale;
        break;
      }
    }
    return result;
  }

 private:
  double u(int m, std::size_t node) const { return field_.re(m, node); }

  template <class Sample>
  double convolve(const Weights& w, Sample&& sample) const {
    const std::size_t N = static_cast<std::size_t>(grid_.N);
    double total = 0.0;
    if (grid_.n == 1) {
      for (std::size_t a = 0; a < w[0].index.size(); ++a) total += w[0].weight[a] * sample(w[0].index[a]);
    } else if (grid_.n == 2) {
      for (std::size_t a = 0; a < w[0].index.size(); ++a) {
        const std::size_t base = w[0].index[a] * N;
        double row = 0.0;
        for (std::size_t b = 0; b < w[1].index.size(); ++b) row += w[1].weight[b] * sample(base + w[1].index[b]);
        total += w[0].weight[a] * row;
      }
    } else {
      for (std::size_t a = 0; a < w[0].index.size(); ++a) {
        double plane = 0.0;
        for (std::size_t b = 0; b < w[1].index.size(); ++b) {
          const std::size_t base = (w[0].index[a] * N + w[1].index[b]) * N;
          double row = 0.0;
          for (std::size_t c = 0; c < w[2].index.size(); ++c) row += w[2].weight[c] * sample(base + w[2].index[c]);
          plane += w[1].weight[b] * row;
        }
        total += w[0].weight[a] * plane;
      }
    }
    return total;
  }

  /// (G_tau * u(., t - tau))(x) with the history policy for t - tau < 0.
  double smoothed(double tau) const {
    Weights w;
    for (int axis = 0; axis < grid_.n; ++axis)
      w[axis] = axis_weights(grid_, point_.index[axis], tau, quad_.gaussian_cutoff);
    const double time = t_ - tau;
    const double dt = grid_.dt();
    using Kind = HistoryPolicy::Kind;
    if (time >= -1e-12 * dt || periodic_time_) {
      const detail::TimeStencil ts = detail::cubic_in_time(std::max(time, periodic_time_ ? time : 0.0), grid_.Mt, dt,
                                                           periodic_time_);
      double value = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int m = ts.index[k];
        value += ts.coef[k] * convolve(w, [&](std::size_t node) { return u(m, node); });
      }
      return value;
    }
    switch (history_.kind) {
      case Kind::zero_past:
        return 0.0;
      case Kind::constant_past:
        return convolve(w, [&](std::size_t node) { return u(0, node); });
      case Kind::analytic:
        return convolve(w, [&](std::size_t node) { return history_.past(node, time); });
      case Kind::periodic:
        break;
    }
    return 0.0;
  }

  double Lu(const MultiIndex& idx, int m) const {
    const std::size_t node = grid_.ravel(idx);
    const detail::Stencil st = detail::first_derivative(m, grid_.Mt, grid_.dt(), periodic_time_);
    double value = 0.0;
    for (int k = 0; k < 5; ++k) value += st.coef[k] * u(st.index[k], node);
    for (int axis = 0; axis < grid_.n; ++axis) {
      const detail::Stencil sx = detail::second_derivative_periodic(idx[axis], grid_.N, grid_.h());
      MultiIndex shifted = idx;
      for (int k = 0; k < 5; ++k) {
        shifted[axis] = sx.index[k];
        value -= sx.coef[k] * u(m, grid_.ravel(shifted));
      }
    }
    return value;
  }

  double L2u(const MultiIndex& idx, int m) const {
    const detail::Stencil st = detail::first_derivative(m, grid_.Mt, grid_.dt(), periodic_time_);
    double value = 0.0;
    for (int k = 0; k < 5; ++k) value += st.coef[k] * Lu(idx, st.index[k]);
    for (int axis = 0; axis < grid_.n; ++axis) {
      const detail::Stencil sx = detail::second_derivative_periodic(idx[axis], grid_.N, grid_.h());
      MultiIndex shifted = idx;
      for (int k = 0; k < 5; ++k) {
        shifted[axis] = sx.index[k];
        value -= sx.coef[k] * Lu(shifted, m);
      }
    }
    return value;
  }

  /// Taylor expansion of u(x,t) - (G_tau * u(., t - tau))(x) = tau Lu - tau^2 L^2u / 2 + ...
  /// with L = d/dt - Laplacian, integrated against tau^{-1-s} on [0, rho].
  double near_panel(double& residual) const {
    const double rho = quad_.near_split;
    const double first = Lu(point_.index, point_.m) * std::pow(rho, 1.0 - s_) / (1.0 - s_);
    const double second = -L2u(point_.index, point_.m) * std::pow(rho, 2.0 - s_) / (2.0 * (2.0 - s_));
    residual = std::abs(second);
    const double floor = std::pow(rho, -s_) * field_scale_;
    if (residual > std::max(std::abs(first), floor))
      throw NumericalError("apply_quadrature: near panel does not converge (residual " + std::to_string(residual) +
                           " vs leading term " + std::to_string(std::abs(first)) + ")");
    return first + second;
  }

  /// int_{start}^{inf} tau^{-1-s} [u - G_tau * u(., 0)] dtau on a periodic box, in closed form per mode.
  double constant_past_history(double start) const {
    const std::size_t spatial = grid_.spatial_size();
    std::vector<cplx> data(field_.slice(0).begin(), field_.slice(0).end());
    Fft fft(std::vector<int>(grid_.n, grid_.N));
    fft.forward(data);
    const auto xi = wavenumbers(grid_.N, grid_.L);
    double total = 0.0;
    for (std::size_t k = 0; k < spatial; ++k) {
      const MultiIndex mode = grid_.unravel(k);
      double a = 0.0;
      double phase = 0.0;
      for (int axis = 0; axis < grid_.n; ++axis) {
        a += xi[mode[axis]] * xi[mode[axis]];
        phase += xi[mode[axis]] * point_.index[axis] * grid_.h();
      }
      // int_start^inf tau^{-1-s} e^{-a tau} dtau = (start^{-s} e^{-a start} - a^s Gamma(1-s, a start)) / s
      double kernel = std::pow(start, -s_) * std::exp(-a * start);
      if (a > 0.0) kernel -= std::pow(a, s_) * (a * start < 700.0 ? boost::math::tgamma(1.0 - s_, a * start) : 0.0);
      kernel /= s_;
      total += (data[k] * std::polar(1.0, phase)).real() * kernel;
    }
    return total / static_cast<double>(spatial);
  }

  template <class Integrate>
  double graded_tail(double start, Integrate&& integrate, double& bound) const {
    const double theta = std::max(quad_.far_cut, 2.0 * start);
    const double value = integrate(detail::graded_edges(start, theta, grid_.dt() / 256.0));
    const double v_far = smoothed(theta);
    const double scale = std::pow(theta, -s_) / s_;
    bound = std::abs(v_far - smoothed(0.5 * theta)) * scale;
    return value + (u_ - v_far) * scale;
  }

  const Field& field_;
  const GridSpec& grid_;
  GridPoint point_;
  double s_;
  QuadratureControls quad_;
  const HistoryPolicy& history_;
  double field_scale_;
  std::size_t node_;
  double t_;
  double u_;
  bool periodic_time_;
  const detail::GaussRule& rule_;
};

void check_point(const GridSpec& grid, const GridPoint& point) {
  if (point.m < 0 || point.m > grid.Mt) throw InvalidArgument("apply_quadrature: time index outside the window");
  for (int axis = 0; axis < grid.n; ++axis)
    if (point.index[axis] < 0 || point.index[axis] >= grid.N)
      throw InvalidArgument("apply_quadrature: spatial index outside the grid");
}

QuadratureResult evaluate(const Field& field, const GridPoint& point, const OperatorParams& params,
                          const HistoryPolicy& history, double scale) {
  check_point(field.grid(), point);
  QuadratureResult r = PointEvaluator(field, point, params, history, scale).run();
  const double K = params.Cns * std::pow(4.0 * std::numbers::pi, 0.5 * field.grid().n);
  r.value *= K;
  r.near_residual *= K;
  r.tail_bound *= K;
  if (!std::isfinite(r.value)) throw NumericalError("apply_quadrature: non-finite result");
  return r;
}

void check_inputs(const Field& field, const OperatorParams& params) {
  params.validate();
  if (!field.is_real()) throw InvalidArgument("apply_quadrature: field must be real");
  if (field.grid().Mt < 4) throw InvalidArgument("apply_quadrature: need at least 5 time samples");
}

}  // namespace

QuadratureResult apply_quadrature(const Field& field, const GridPoint& point, const OperatorParams& params,
                                  const HistoryPolicy& history) {
  check_inputs(field, params);
  return evaluate(field, point, params, history, field.max_abs());
}

std::vector<QuadratureResult> apply_quadrature(const Field& field, std::span<const GridPoint> points,
                                               const OperatorParams& params, const HistoryPolicy& history) {
  check_inputs(field, params);
  const double scale = field.max_abs();
  std::vector<QuadratureResult> out(points.size());
  parallel_for(points.size(), [&](std::size_t k) { out[k] = evaluate(field, points[k], params, history, scale); });
  return out;
}

namespace {

struct CalibrationSetup {
  GridSpec grid;
  std::array<double, 3> xi;
  double omega;
};

CalibrationSetup reference_setup(int n, int resolution) {
  constexpr double pi = std::numbers::pi;
  switch (n) {
    case 1: return {make_grid(1, 4.0, 64 * resolution, 2.0, 32 * resolution), {pi / 2, 0.0, 0.0}, pi};
    case 2: return {make_grid(2, 4.0, 32 * resolution, 2.0, 32 * resolution), {pi / 2, pi / 4, 0.0}, pi};
    case 3: return {make_grid(3, 4.0, 24 * resolution, 4.0, 32 * resolution), {pi / 4, pi / 4, 0.0}, pi / 2};
    default: throw InvalidArgument("calibrate_Cns: n must be 1, 2 or 3");
  }
}

}  // namespace

CalibrationResult calibrate_Cns(int n, double s, const CalibrationOptions& options) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("calibrate_Cns: s must lie in (0, 1)");
  if (options.resolution < 1) throw InvalidArgument("calibrate_Cns: resolution must be at least 1");
  const CalibrationSetup setup = reference_setup(n, options.resolution);
  const GridSpec& grid = setup.grid;
  const Field wave = sample(
      [&](const std::array<double, 3>& x, double t) {
        return std::cos(setup.xi[0] * x[0] + setup.xi[1] * x[1] + setup.xi[2] * x[2] + setup.omega * t);
      },
      grid);
  const double a = setup.xi[0] * setup.xi[0] + setup.xi[1] * setup.xi[1] + setup.xi[2] * setup.xi[2];
  const cplx symbol = symbol_eval(a, setup.omega, s);

  OperatorParams params;
  params.s = s;
  params.Cns = 1.0;
  params.quad.far_cut = std::max(4.0 * grid.T, 40.0 / a);
  params.quad.nodes_per_panel = options.resolution > 1 ? 8 : 6;

  std::vector<GridPoint> points;
  std::vector<double> targets;
  for (int m : {grid.Mt / 4, grid.Mt / 2, 3 * grid.Mt / 4}) {
    for (int j : {grid.N / 2, grid.N / 2 + grid.N / 8, grid.N / 4}) {
      MultiIndex idx{j, 0, 0};
      for (int axis = 1; axis < n; ++axis) idx[axis] = grid.N / 2;
      const std::size_t node = grid.ravel(idx);
      // Re(symbol * e^{i theta}) at the point, with theta the wave phase.
      const auto x = grid.coords(node);
      const double theta = setup.xi[0] * x[0] + setup.xi[1] * x[1] + setup.xi[2] * x[2] + setup.omega * grid.t(m);
      const double target = (symbol * std::polar(1.0, theta)).real();
      if (std::abs(target) < 0.3 * std::abs(symbol)) continue;
      points.push_back({idx, m});
      targets.push_back(target);
    }
  }
  const auto results = apply_quadrature(wave, points, params, HistoryPolicy::periodic());

  std::vector<double> ratios;
  for (std::size_t k = 0; k < points.size(); ++k) ratios.push_back(targets[k] / results[k].value);
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double spread = 0.0;
  for (double r : ratios) spread = std::max(spread, std::abs(r - mean));

  CalibrationResult out{mean, spread / std::abs(mean), grid};
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw NumericalError("calibrate_Cns: calibration produced a non-positive constant");
  if (out.residual > options.max_residual)
    throw NumericalError("calibrate_Cns: calibration residual " + std::to_string(out.residual) + " exceeds " +
                         std::to_string(options.max_residual));
  return out;
}

}  // namespace masterheat
