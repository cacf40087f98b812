#include "masterheat/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "masterheat/error.hpp"

namespace masterheat {

std::size_t GridSpec::spatial_size() const {
  std::size_t size = 1;
  for (int axis = 0; axis < n; ++axis) size *= static_cast<std::size_t>(N);
  return size;
}

MultiIndex GridSpec::unravel(std::size_t node) const {
  MultiIndex idx{0, 0, 0};
  for (int axis = n - 1; axis >= 0; --axis) {
    idx[axis] = static_cast<int>(node % N);
    node /= N;
  }
  return idx;
}

std::size_t GridSpec::ravel(const MultiIndex& idx) const {
  std::size_t node = 0;
  for (int axis = 0; axis < n; ++axis) node = node * N + static_cast<std::size_t>(idx[axis]);
  return node;
}

std::array<double, 3> GridSpec::coords(std::size_t node) const {
  const MultiIndex idx = unravel(node);
  std::array<double, 3> xs{0.0, 0.0, 0.0};
  for (int axis = 0; axis < n; ++axis) xs[axis] = x(idx[axis]);
  return xs;
}

void GridSpec::validate() const {
  if (n < 1 || n > 3) throw InvalidArgument("grid: dimension n must be 1, 2 or 3, got " + std::to_string(n));
  if (N < 8) throw InvalidArgument("grid: N must be at least 8, got " + std::to_string(N));
  if (N % 2 != 0) throw InvalidArgument("grid: N must be even (odd-N), got " + std::to_string(N));
  if (Mt < 2) throw InvalidArgument("grid: Mt must be at least 2, got " + std::to_string(Mt));
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("grid: half-extent L must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("grid: horizon T must be positive");
}

bool GridSpec::same_space(const GridSpec& other) const {
  return n == other.n && L == other.L && N == other.N;
}

GridSpec make_grid(int n, double L, int N, double T, int Mt, bool periodic) {
  GridSpec grid{n, L, N, T, Mt, periodic};
  grid.validate();
  return grid;
}

std::vector<double> wavenumbers(int N, double L) {
  std::vector<double> xi(N);
  for (int k = 0; k < N; ++k) {
    const int signed_k = k < N / 2 ? k : k - N;
    xi[k] = std::numbers::pi * signed_k / L;
  }
  return xi;
}

std::vector<double> temporal_frequencies(int Mt, double T) {
  std::vector<double> omega(Mt);
  for (int m = 0; m < Mt; ++m) {
    const int signed_m = m < (Mt + 1) / 2 ? m : m - Mt;
    omega[m] = 2.0 * std::numbers::pi * signed_m / T;
  }
  return omega;
}

}  // namespace masterheat
