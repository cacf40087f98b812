#include <algorithm>
#include <cmath>

#include "masterheat/criticality.hpp"
#include "masterheat/error.hpp"
#include "masterheat/fft.hpp"
#include "masterheat/operator.hpp"
#include "masterheat/parallel.hpp"
#include "numerics.hpp"

namespace masterheat {

namespace {

/// int_0^z eta(q) dq for the time cutoff.
double cutoff_primitive(double z) {
  if (z <= 1.0) return z;
  if (z >= 2.0) return 1.5;
  const double q = z - 1.0;
  return z - q * q * q * q * (2.5 + q * (-3.0 + q));
}

struct Node {
  double sigma;
  double weight;
};

/// Gauss nodes on [start, end] with widths doubling from first_width up to max_width.
void append_panels(std::vector<Node>& nodes, const detail::GaussRule& rule, double start, double end,
                   double first_width, double max_width) {
  double a = start;
  double w = first_width;
  while (a < end * (1.0 - 1e-14)) {
    const double b = std::min(a + w, end);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t q = 0; q < rule.x.size(); ++q) nodes.push_back({mid + half * rule.x[q], half * rule.w[q]});
    a = b;
    w = std::min(2.0 * w, max_width);
  }
}

/// Periodic heat semigroup applied to psi, by FFT.
class HeatFlow {
 public:
  HeatFlow(const GridSpec& grid, const std::vector<double>& psi)
      : grid_(grid), fft_(std::vector<int>(grid.n, grid.N)), xi2_(grid.spatial_size(), 0.0) {
    const std::vector<double> k = wavenumbers(grid.N, grid.L);
    for (std::size_t node = 0; node < xi2_.size(); ++node) {
      const MultiIndex idx = grid.unravel(node);
      for (int d = 0; d < grid.n; ++d) xi2_[node] += k[idx[d]] * k[idx[d]];
    }
    hat_.assign(psi.begin(), psi.end());
    fft_.forward(hat_);
    mean_ = hat_[0].real() / static_cast<double>(hat_.size());
    lowest_ = (M_PI / grid.L) * (M_PI / grid.L);
  }

  std::vector<double> at(double sigma) const {
    std::vector<cplx> work(hat_.size());
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = hat_[i] * std::exp(-sigma * xi2_[i]);
    fft_.backward(work);
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = work[i].real();
    return out;
  }

  std::vector<double> laplacian() const {
    std::vector<cplx> work(hat_.size());
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = -xi2_[i] * hat_[i];
    fft_.backward(work);
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = work[i].real();
    return out;
  }

  double mean() const { return mean_; }
  double lowest() const { return lowest_; }

 private:
  GridSpec grid_;
  Fft fft_;
  std::vector<double> xi2_;
  std::vector<cplx> hat_;
  double mean_ = 0.0;
  double lowest_ = 0.0;
};

double fit_slope(const std::vector<double>& R, const std::vector<double>& v) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!(std::abs(v[i]) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double x = std::log(R[i]);
    const double y = std::log(std::abs(v[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RescalingReport rescaling_diagnostic(const Trajectory& trajectory, const WeightSpec& weight,
                                     const NonlinearitySpec& nonlin, std::span<const double> R_list,
                                     const RescalingParams& params) {
  const GridSpec& grid = trajectory.grid;
  const double s = params.s;
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("rescaling_diagnostic: s must lie in (0, 1)");
  if (trajectory.steps() < 1) throw InvalidArgument("rescaling_diagnostic: trajectory needs at least two slices");
  if (R_list.size() < 3) throw InvalidArgument("rescaling_diagnostic: at least three R values are required");
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    if (!(R_list[i] > 0.0)) throw InvalidArgument("rescaling_diagnostic: R values must be positive");
    if (i > 0 && !(R_list[i] > R_list[i - 1])) throw InvalidArgument("rescaling_diagnostic: R values must increase");
    if (2.0 * R_list[i] > grid.L) throw InvalidArgument("rescaling_diagnostic: R too large for box (2R > L)");
  }
  const int n = grid.n;
  const std::size_t S = grid.spatial_size();
  const double cell = std::pow(grid.h(), n);
  const double Cns = params.Cns > 0.0 ? params.Cns : analytic_Cns(n, s);
  const double K = Cns * std::pow(4.0 * M_PI, 0.5 * n);
  const double dt = trajectory.dt;
  const int steps = static_cast<int>(trajectory.steps());
  const double Tw = steps * dt;
  const double rho = 0.5 * grid.h() * grid.h();
  const detail::GaussRule& rule = detail::gauss_rule(params.nodes_per_panel);

  RescalingReport rep;
  rep.predicted_lhs_slope = n + 2.0 * s;
  rep.predicted_rhs_slope = n + params.alpha;
  rep.insufficient_range = std::log10(R_list.back() / R_list.front()) < 0.5;
  const double tau_min = std::pow(R_list.front(), 2.0 * s);
  const double tau_max = std::pow(R_list.back(), 2.0 * s);
  rep.regime = Tw < tau_min ? "window" : (Tw >= 2.0 * tau_max ? "full" : "mixed");

  double umax = 0.0, spread = 0.0;
  for (const auto& slice : trajectory.slices)
    for (std::size_t node = 0; node < S; ++node) {
      umax = std::max(umax, std::abs(slice[node]));
      spread = std::max(spread, std::abs(slice[node] - trajectory.slices[0][0]));
    }
  rep.degenerate = spread <= 1e-12 * std::max(umax, 1e-300);

  std::vector<double> a(S);
  for (std::size_t node = 0; node < S; ++node) a[node] = weight(grid.coords(node));
  std::vector<double> trap(steps + 1, dt);
  trap.front() = trap.back() = 0.5 * dt;

  rep.points.resize(R_list.size());
  parallel_for(R_list.size(), [&](std::size_t i) {
    const double R = R_list[i];
    const double tau = std::pow(R, 2.0 * s);
    std::vector<double> psi(S);
    for (std::size_t node = 0; node < S; ++node) {
      const auto x = grid.coords(node);
      psi[node] = cutoff(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / R);
    }
    const HeatFlow flow(grid, psi);
    const std::vector<double> lap = flow.laplacian();

    // Lags in [rho, 2 tau] see the time cutoff; beyond it only the past correction needs lags.
    std::vector<Node> inner;
    append_panels(inner, rule, rho, 2.0 * tau, rho, tau / 16.0);
    std::vector<std::vector<double>> smoothed(inner.size());
    for (std::size_t q = 0; q < inner.size(); ++q) smoothed[q] = flow.at(inner[q].sigma);

    RescalingPoint pt;
    pt.R = R;
    pt.coverage = std::min(1.0, Tw / (2.0 * tau));
    const double near_scale = std::pow(rho, 1.0 - s) / (1.0 - s);
    const double beyond = std::pow(2.0 * tau, -s) / s;
    std::vector<double> kernel(inner.size());
    double kernel_sum = 0.0;
    for (std::size_t q = 0; q < inner.size(); ++q) {
      kernel[q] = inner[q].weight * std::pow(inner[q].sigma, -1.0 - s);
      kernel_sum += kernel[q];
    }
    std::vector<double> adj(S);
    for (int m = 0; m <= steps; ++m) {
      const double t = trajectory.time(m);
      if (t >= 2.0 * tau) break;
      const double eta = cutoff(t / tau);
      const double deta = cutoff_derivative(t / tau) / tau;
      for (std::size_t node = 0; node < S; ++node)
        adj[node] = psi[node] * eta * (kernel_sum + beyond) - (deta * psi[node] + eta * lap[node]) * near_scale;
      for (std::size_t q = 0; q < inner.size(); ++q) {
        const double c = kernel[q] * cutoff((t + inner[q].sigma) / tau);
        if (c == 0.0) continue;
        for (std::size_t node = 0; node < S; ++node) adj[node] -= c * smoothed[q][node];
      }
      const std::vector<double>& u = trajectory.slices[m];
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t node = 0; node < S; ++node) {
        lhs += u[node] * K * adj[node];
        rhs += a[node] * nonlin(u[node]) * psi[node] * eta;
      }
      pt.lhs += trap[m] * cell * lhs;
      pt.rhs += trap[m] * cell * rhs;
    }

    // -K int u0(x) int_0^inf sigma^{-1-s} (E(sigma) - E(0)) (G_sigma * psi)(x) dsigma dx,
    // with E the primitive of the time cutoff.
    const std::vector<double>& u0 = trajectory.slices[0];
    std::vector<double> acc(S, 0.0);
    for (std::size_t node = 0; node < S; ++node) acc[node] = psi[node] * near_scale;
    for (std::size_t q = 0; q < inner.size(); ++q) {
      const double sg = inner[q].sigma;
      const double c = inner[q].weight * std::pow(sg, -1.0 - s) * tau * cutoff_primitive(sg / tau);
      for (std::size_t node = 0; node < S; ++node) acc[node] += c * smoothed[q][node];
    }
    const double theta = std::max(8.0 * tau, 40.0 / flow.lowest());
    std::vector<Node> outer;
    append_panels(outer, rule, 2.0 * tau, theta, tau / 16.0, std::numeric_limits<double>::infinity());
    const double total = 1.5 * tau;
    for (const Node& nd : outer) {
      const std::vector<double> g = flow.at(nd.sigma);
      const double c = nd.weight * std::pow(nd.sigma, -1.0 - s) * total;
      for (std::size_t node = 0; node < S; ++node) acc[node] += c * g[node];
    }
    double correction = 0.0;
    for (std::size_t node = 0; node < S; ++node)
      correction += u0[node] * (acc[node] + total * flow.mean() * std::pow(theta, -s) / s);
    pt.past_correction = -K * cell * correction;
    pt.lhs += pt.past_correction;
    pt.relative_gap = std::abs(pt.lhs - pt.rhs) / std::max(std::abs(pt.rhs), 1e-300);
    rep.points[i] = pt;
  });

  std::vector<double> Rs, lhs, rhs;
  for (const auto& p : rep.points) {
    Rs.push_back(p.R);
    lhs.push_back(p.lhs);
    rhs.push_back(p.rhs);
  }
  rep.lhs_slope = rep.degenerate ? std::numeric_limits<double>::quiet_NaN() : fit_slope(Rs, lhs);
  rep.rhs_slope = fit_slope(Rs, rhs);
  return rep;
}

}  // namespace masterheat
