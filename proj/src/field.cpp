#include "masterheat/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "masterheat/error.hpp"

namespace masterheat {

namespace {

void check_finite(std::span<const cplx> values, const GridSpec& grid) {
  const std::size_t spatial = grid.spatial_size();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k].real()) || !std::isfinite(values[k].imag())) {
      throw NumericalError("field: non-finite sample at time index " + std::to_string(k / spatial) +
                           ", node " + std::to_string(k % spatial));
    }
  }
}

}  // namespace

Field::Field(const GridSpec& grid, FieldKind kind) : grid_(grid), kind_(kind), values_(grid.size()) {
  grid_.validate();
}

Field::Field(const GridSpec& grid, std::vector<cplx> values, FieldKind kind)
    : grid_(grid), kind_(kind), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("field: value array has " + std::to_string(values_.size()) + " samples, grid needs " +
                          std::to_string(grid_.size()));
  }
  check_finite(values_, grid_);
  if (kind_ == FieldKind::real) {
    for (auto& v : values_) v = {v.real(), 0.0};
  }
}

Field Field::from_real(const GridSpec& grid, std::vector<double> values) {
  std::vector<cplx> cvalues(values.begin(), values.end());
  return Field(grid, std::move(cvalues), FieldKind::real);
}

std::span<const cplx> Field::slice(int m) const {
  if (m < 0 || m > grid_.Mt) throw InvalidArgument("field: time index out of range");
  return std::span<const cplx>(values_).subspan(offset(m), grid_.spatial_size());
}

std::vector<double> Field::real_slice(int m) const {
  const auto s = slice(m);
  std::vector<double> out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), [](cplx v) { return v.real(); });
  return out;
}

double Field::max_abs() const {
  double best = 0.0;
  for (const auto& v : values_) best = std::max(best, std::abs(v));
  return best;
}

Field sample(const RealExpression& expr, const GridSpec& grid) {
  grid.validate();
  const std::size_t spatial = grid.spatial_size();
  std::vector<cplx> values(grid.size());
  for (int m = 0; m <= grid.Mt; ++m) {
    const double t = grid.t(m);
    for (std::size_t node = 0; node < spatial; ++node) {
      const double v = expr(grid.coords(node), t);
      if (!std::isfinite(v)) {
        throw NumericalError("sample: expression is not finite at time index " + std::to_string(m) + ", node " +
                             std::to_string(node));
      }
      values[m * spatial + node] = v;
    }
  }
  return Field(grid, std::move(values), FieldKind::real);
}

Field sample(const ComplexExpression& expr, const GridSpec& grid) {
  grid.validate();
  const std::size_t spatial = grid.spatial_size();
  std::vector<cplx> values(grid.size());
  bool any_imag = false;
  for (int m = 0; m <= grid.Mt; ++m) {
    const double t = grid.t(m);
    for (std::size_t node = 0; node < spatial; ++node) {
      const cplx v = expr(grid.coords(node), t);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NumericalError("sample: expression is not finite at time index " + std::to_string(m) + ", node " +
                             std::to_string(node));
      }
      any_imag = any_imag || v.imag() != 0.0;
      values[m * spatial + node] = v;
    }
  }
  return Field(grid, std::move(values), any_imag ? FieldKind::complex : FieldKind::real);
}

double l2_norm(std::span<const cplx> slice, const GridSpec& grid) {
  double sum = 0.0;
  for (const auto& v : slice) sum += std::norm(v);
  return std::pow(grid.h(), 0.5 * grid.n) * std::sqrt(sum);
}

double l2_norm(std::span<const double> slice, const GridSpec& grid) {
  double sum = 0.0;
  for (double v : slice) sum += v * v;
  return std::pow(grid.h(), 0.5 * grid.n) * std::sqrt(sum);
}

double l2_norm(const Field& field, int m) { return l2_norm(field.slice(m), field.grid()); }

SlowlyIncreasingReport slowly_increasing_check(const Field& field, double s, int t_index, double truncation_T,
                                               const SlowlyIncreasingOptions& options) {
  const GridSpec& grid = field.grid();
  if (t_index < 0 || t_index > grid.Mt) throw InvalidArgument("slowly_increasing_check: time index out of range");
  if (!(truncation_T > 0.0)) throw InvalidArgument("slowly_increasing_check: truncation_T must be positive");

  const double t = grid.t(t_index);
  const double dt = grid.dt();
  const double cell = std::pow(grid.h(), grid.n);
  const double exponent = 0.5 * grid.n + 1.0 + s;
  const std::size_t spatial = grid.spatial_size();

  // Trapezoid in time over the retained nodes tau_m in [t - truncation_T, t].
  const int m_first = std::max(0, static_cast<int>(std::ceil((t - truncation_T) / dt - 1e-12)));
  double estimate = 0.0;
  for (int m = m_first; m <= t_index; ++m) {
    const double lag = t - grid.t(m);
    double spatial_sum = 0.0;
    for (std::size_t node = 0; node < spatial; ++node) {
      const auto x = grid.coords(node);
      const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      double weight = 0.0;
      if (lag > 0.0) {
        weight = std::exp(-r2 / (4.0 * lag));
      } else if (r2 == 0.0) {
        weight = 1.0;
      }
      spatial_sum += std::abs(field.at(m, node)) * weight;
    }
    const double end_factor = (m == m_first || m == t_index) ? 0.5 : 1.0;
    estimate += end_factor * dt * cell * spatial_sum / (1.0 + std::pow(lag, exponent));
  }

  // Beyond the retained window |u| <= G, and the Gaussian integrates to (4 pi sigma)^{n/2}.
  const double G = options.growth_bound >= 0.0 ? options.growth_bound : field.max_abs();
  const double window = std::min(truncation_T, t);
  const double tail_start = window;
  auto integrand = [&](double sigma) {
    return std::pow(4.0 * std::numbers::pi * sigma, 0.5 * grid.n) / (1.0 + std::pow(sigma, exponent));
  };
  double tail = 0.0;
  if (G > 0.0) {
    tail = G * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                   integrand, tail_start, std::numeric_limits<double>::infinity(), 15, 1e-10);
  }

  SlowlyIncreasingReport report;
  report.integral_estimate = estimate;
  report.tail_bound = tail;
  report.cap = options.cap;
  report.finite = std::isfinite(estimate + tail) && estimate + tail < options.cap;
  return report;
}

}  // namespace masterheat
