#include "masterheat/moving_planes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "masterheat/error.hpp"
#include "masterheat/operator.hpp"
#include "masterheat/parallel.hpp"

namespace masterheat {

namespace {

constexpr double kIndexTol = 1e-9;

void check_lambda(const GridSpec& grid, double lambda) {
  if (!(lambda >= -grid.L && lambda <= grid.L))
    throw InvalidArgument("reflect: lambda " + std::to_string(lambda) + " outside the box");
}

int wrap(int j, int N) { return ((j % N) + N) % N; }

double quintic_step(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  return z * z * z * (10.0 + z * (-15.0 + 6.0 * z));
}

}  // namespace

bool PlaneReflection::commensurate(const GridSpec& grid) const {
  const double k = index_sum(grid);
  return std::abs(k - std::round(k)) < kIndexTol;
}

Reflected reflect_checked(const Field& field, double lambda) {
  const GridSpec& grid = field.grid();
  check_lambda(grid, lambda);
  const PlaneReflection plane{lambda};
  const double k = plane.index_sum(grid);
  const bool exact = plane.commensurate(grid);
  const int k_int = static_cast<int>(std::lround(k));
  const std::size_t spatial = grid.spatial_size();

  std::vector<cplx> out(grid.size());
  for (std::size_t node = 0; node < spatial; ++node) {
    MultiIndex idx = grid.unravel(node);
    if (exact) {
      idx[0] = wrap(k_int - idx[0], grid.N);
      const std::size_t src = grid.ravel(idx);
      for (int m = 0; m <= grid.Mt; ++m) out[m * spatial + node] = field.at(m, src);
      continue;
    }
    const double pos = k - idx[0];
    const int base = static_cast<int>(std::floor(pos));
    const double frac = pos - base;
    MultiIndex lo = idx;
    MultiIndex hi = idx;
    lo[0] = wrap(base, grid.N);
    hi[0] = wrap(base + 1, grid.N);
    const std::size_t a = grid.ravel(lo);
    const std::size_t b = grid.ravel(hi);
    for (int m = 0; m <= grid.Mt; ++m) out[m * spatial + node] = (1.0 - frac) * field.at(m, a) + frac * field.at(m, b);
  }
  return {Field(grid, std::move(out), field.kind()), !exact};
}

Field reflect(const Field& field, double lambda) { return reflect_checked(field, lambda).field; }

Field w_lambda(const Field& field, double lambda) {
  const Field reflected = reflect(field, lambda);
  std::vector<cplx> out(field.values().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = reflected.values()[k] - field.values()[k];
  return Field(field.grid(), std::move(out), field.kind());
}

double lipschitz_quotient(const NonlinearitySpec& nonlin, double u_value, double ulam_value, double tol) {
  const auto [lo, hi] = nonlin.lipschitz_on;
  for (double v : {u_value, ulam_value})
    if (!(v >= lo && v <= hi))
      throw InvalidArgument("lipschitz_quotient: value " + std::to_string(v) + " outside the Lipschitz interval");
  const double diff = ulam_value - u_value;
  const double q = std::abs(diff) < tol ? nonlin.derivative(u_value) : (nonlin(ulam_value) - nonlin(u_value)) / diff;
  const double lip = nonlin.lipschitz_constant(std::min(u_value, ulam_value), std::max(u_value, ulam_value));
  const double slack = 1e-9 * std::max(1.0, lip);
  if (std::abs(q) > lip + slack || (nonlin.nondecreasing && q < -slack))
    throw NumericalError("lipschitz_quotient: quotient " + std::to_string(q) + " outside [0, " + std::to_string(lip) +
                         "]");
  return q;
}

std::vector<int> sigma_lambda_columns(const GridSpec& grid, double lambda, int margin) {
  check_lambda(grid, lambda);
  const double k = PlaneReflection{lambda}.index_sum(grid);
  std::vector<int> cols;
  for (int j = margin; j < grid.N - margin; ++j) {
    if (!(grid.x(j) < lambda - margin * grid.h() - kIndexTol * grid.h())) continue;
    const double mirror = k - j;
    if (mirror > grid.N - 1 - margin + kIndexTol) continue;
    cols.push_back(j);
  }
  return cols;
}

namespace {

/// Spectral operator with constant past: prepend a constant segment, append a
/// smooth return to the initial slice, and read back the original window.
Field spectral_with_constant_past(const Field& w, double s, double pad_time) {
  const GridSpec& g = w.grid();
  const double dt = g.dt();
  if (pad_time <= 0.0) {
    const double slowest = std::pow(std::numbers::pi / g.L, 2);
    pad_time = 18.5 / slowest;
  }
  const int pre = static_cast<int>(std::ceil(pad_time / dt));
  const int post = std::max(g.Mt, 8);
  const int total = pre + g.Mt + post;
  const std::size_t spatial = g.spatial_size();
  const GridSpec ext = make_grid(g.n, g.L, g.N, total * dt, total, g.periodic);
  std::vector<cplx> values(ext.size());
  for (int e = 0; e <= total; ++e) {
    for (std::size_t node = 0; node < spatial; ++node) {
      cplx v;
      if (e <= pre || e == total) {
        v = w.at(0, node);
      } else if (e <= pre + g.Mt) {
        v = w.at(e - pre, node);
      } else {
        const double b = quintic_step(static_cast<double>(e - pre - g.Mt) / post);
        v = (1.0 - b) * w.at(g.Mt, node) + b * w.at(0, node);
      }
      values[e * spatial + node] = v;
    }
  }
  const Field applied = apply_spectral(Field(ext, std::move(values), w.kind()), s);
  std::vector<cplx> out(g.size());
  for (int m = 0; m <= g.Mt; ++m)
    for (std::size_t node = 0; node < spatial; ++node) out[m * spatial + node] = applied.at(pre + m, node);
  return Field(g, std::move(out), w.kind());
}

}  // namespace

ResidualReport inequality_residual(const Field& field, const WeightSpec& weight, const NonlinearitySpec& nonlin,
                                   double lambda, const ResidualOptions& options) {
  if (!field.is_real()) throw InvalidArgument("inequality_residual: field must be real");
  const GridSpec& grid = field.grid();
  const Field reflected = reflect(field, lambda);
  const Field w = w_lambda(field, lambda);
  const std::vector<int> cols = sigma_lambda_columns(grid, lambda, options.margin);

  std::vector<ResidualSite> sites;
  const std::size_t spatial = grid.spatial_size();
  for (int m = 0; m <= grid.Mt; ++m)
    for (std::size_t node = 0; node < spatial; ++node) {
      const MultiIndex idx = grid.unravel(node);
      if (std::binary_search(cols.begin(), cols.end(), idx[0])) sites.push_back({node, m, 0.0});
    }

  if (options.route == ResidualRoute::spectral) {
    const Field op = spectral_with_constant_past(w, options.s, options.pad_time);
    for (auto& site : sites) site.value = op.re(site.m, site.node);
  } else {
    OperatorParams params;
    params.s = options.s;
    params.Cns = options.Cns > 0.0 ? options.Cns : analytic_Cns(grid.n, options.s);
    std::vector<GridPoint> points;
    for (const auto& site : sites) points.push_back({grid.unravel(site.node), site.m});
    const auto results = apply_quadrature(w, points, params, HistoryPolicy::constant_past());
    for (std::size_t k = 0; k < sites.size(); ++k) sites[k].value = results[k].value;
  }

  ResidualReport rep;
  rep.lambda = lambda;
  for (auto& site : sites) {
    const double u = field.re(site.m, site.node);
    const double ul = reflected.re(site.m, site.node);
    const double M = lipschitz_quotient(nonlin, u, ul);
    site.value -= weight(grid.coords(site.node)) * M * (ul - u);
    if (site.value < rep.min_residual) {
      rep.min_residual = site.value;
      rep.argmin = site;
    }
  }
  rep.sites = std::move(sites);
  return rep;
}

MonotonicityReport monotonicity_check(const Field& field, std::span<const double> lambdas, const Region& region) {
  if (!field.is_real()) throw InvalidArgument("monotonicity_check: field must be real");
  const GridSpec& grid = field.grid();
  MonotonicityReport rep;
  const int m_last = std::min(region.m_last, grid.Mt);
  for (double lambda : lambdas) {
    const Field w = w_lambda(field, lambda);
    const auto cols = sigma_lambda_columns(grid, lambda, 0);
    LambdaMargin lm{lambda};
    for (int m = std::max(region.m_first, 0); m <= m_last; ++m) {
      for (std::size_t node = 0; node < grid.spatial_size(); ++node) {
        const MultiIndex idx = grid.unravel(node);
        const double x1 = grid.x(idx[0]);
        if (x1 < region.x1_min || x1 > region.x1_max) continue;
        if (!std::binary_search(cols.begin(), cols.end(), idx[0])) continue;
        const double value = w.re(m, node);
        const double margin = value - region.required_margin;
        lm.min_margin = std::min(lm.min_margin, margin);
        if (margin <= 0.0) {
          ++lm.violations;
          if (rep.violation_sites.size() < region.max_recorded)
            rep.violation_sites.push_back({grid.coords(node), grid.t(m), lambda, value});
        }
      }
    }
    lm.pass = lm.violations == 0;
    rep.min_margin = std::min(rep.min_margin, lm.min_margin);
    rep.lambdas_tested.push_back(lambda);
    rep.per_lambda.push_back(lm);
  }
  return rep;
}

SymmetryReport symmetry_check(const Field& field, const WeightSpec& weight, SymmetryMode mode, double tol) {
  const GridSpec& grid = field.grid();
  SymmetryReport rep;
  rep.mode = mode;
  rep.weight_consistent = mode == SymmetryMode::even_x1 ? weight.even_in_x1 : weight.radial;
  const std::size_t spatial = grid.spatial_size();
  if (mode == SymmetryMode::even_x1) {
    for (int m = 0; m <= grid.Mt; ++m)
      for (std::size_t node = 0; node < spatial; ++node) {
        MultiIndex idx = grid.unravel(node);
        idx[0] = wrap(grid.N - idx[0], grid.N);
        rep.max_deviation = std::max(rep.max_deviation, std::abs(field.at(m, grid.ravel(idx)) - field.at(m, node)));
      }
    rep.classes = static_cast<std::size_t>(grid.N / 2 + 1);
  } else {
    std::map<long, std::vector<std::size_t>> shells;
    for (std::size_t node = 0; node < spatial; ++node) {
      const MultiIndex idx = grid.unravel(node);
      long r2 = 0;
      for (int axis = 0; axis < grid.n; ++axis) r2 += static_cast<long>(idx[axis] - grid.N / 2) * (idx[axis] - grid.N / 2);
      shells[r2].push_back(node);
    }
    rep.classes = shells.size();
    for (int m = 0; m <= grid.Mt; ++m)
      for (const auto& [r2, nodes] : shells) {
        const cplx ref = field.at(m, nodes.front());
        for (std::size_t node : nodes) rep.max_deviation = std::max(rep.max_deviation, std::abs(field.at(m, node) - ref));
      }
  }
  rep.threshold = tol * field.max_abs();
  rep.pass = rep.max_deviation <= rep.threshold;
  return rep;
}

}  // namespace masterheat
