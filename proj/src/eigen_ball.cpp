#include <algorithm>
#include <cmath>
#include <numeric>

#include "masterheat/criticality.hpp"
#include "masterheat/error.hpp"
#include "masterheat/operator.hpp"

namespace masterheat {

namespace {

class ProjectedOperator {
 public:
  ProjectedOperator(const GridSpec& grid, double s) : grid_(grid), s_(s), inside_(grid.spatial_size(), false) {
    for (std::size_t node = 0; node < inside_.size(); ++node) {
      const auto x = grid.coords(node);
      inside_[node] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0;
    }
  }

  std::size_t interior() const { return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), true)); }
  bool inside(std::size_t node) const { return inside_[node]; }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y = frac_laplacian_apply(std::span<const double>(x), grid_, s_);
    project(y);
    return y;
  }

  void project(std::vector<double>& x) const {
    for (std::size_t node = 0; node < x.size(); ++node)
      if (!inside_[node]) x[node] = 0.0;
  }

 private:
  GridSpec grid_;
  double s_;
  std::vector<bool> inside_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

/// Conjugate gradients for A y = b, started from the previous iterate.
std::vector<double> solve(const ProjectedOperator& A, const std::vector<double>& b, std::vector<double> y,
                          const EigenOptions& opt) {
  std::vector<double> r = b;
  axpy(-1.0, A.apply(y), r);
  std::vector<double> p = r;
  double rr = dot(r, r);
  const double stop = opt.cg_tol * opt.cg_tol * dot(b, b);
  for (int it = 0; it < opt.cg_max_iterations && rr > stop; ++it) {
    const std::vector<double> Ap = A.apply(p);
    const double step = rr / dot(p, Ap);
    axpy(step, p, y);
    axpy(-step, Ap, r);
    const double rr_next = dot(r, r);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rr_next / rr) * p[i];
    rr = rr_next;
  }
  return y;
}

}  // namespace

EigenPair eigen_ball(double s, const GridSpec& grid, const EigenOptions& options) {
  grid.validate();
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("eigen_ball: s must lie in (0, 1]");
  if (grid.L < 2.0) throw InvalidArgument("eigen_ball: the box must contain B_2(0) (L >= 2)");
  const ProjectedOperator A(grid, s);
  EigenPair pair;
  pair.grid = grid;
  pair.s = s;
  pair.interior_nodes = A.interior();
  if (pair.interior_nodes == 0) throw InvalidArgument("eigen_ball: no grid nodes inside the unit ball");

  std::vector<double> x(grid.spatial_size(), 0.0);
  for (std::size_t node = 0; node < x.size(); ++node)
    if (A.inside(node)) {
      const auto c = grid.coords(node);
      x[node] = 1.0 - (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    }
  std::vector<double> y;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double norm = std::sqrt(dot(x, x));
    for (double& v : x) v /= norm;
    const std::vector<double> Ax = A.apply(x);
    pair.lambda1 = dot(x, Ax);
    double res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) res += (Ax[i] - pair.lambda1 * x[i]) * (Ax[i] - pair.lambda1 * x[i]);
    pair.residual = std::sqrt(res);
    pair.iterations = it;
    if (!std::isfinite(pair.residual)) throw NumericalError("eigen_ball: non-finite iterate");
    if (pair.residual <= options.tol) break;
    if (it == options.max_iterations)
      throw NumericalError("eigen_ball: no convergence after " + std::to_string(it) + " iterations (residual " +
                           std::to_string(pair.residual) + ")");
    y = x;
    for (double& v : y) v /= pair.lambda1;
    y = solve(A, x, y, options);
    x = y;
  }
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  const double peak = sum >= 0.0 ? *std::max_element(x.begin(), x.end()) : *std::min_element(x.begin(), x.end());
  for (double& v : x) v /= peak;
  pair.phi = std::move(x);
  return pair;
}

}  // namespace masterheat
