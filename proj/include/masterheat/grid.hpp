#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace masterheat {

using MultiIndex = std::array<int, 3>;

/// Uniform space-time grid on [-L, L)^n x [0, T].
///
/// Spatial nodes are x_j = -L + j h (j = 0..N-1, h = 2L/N); time nodes are
/// t_m = m dt (m = 0..Mt, dt = T/Mt). Values are stored time-major, then
/// row-major over the n spatial axes.
struct GridSpec {
  int n = 1;
  double L = 8.0;
  int N = 64;
  double T = 1.0;
  int Mt = 32;
  bool periodic = true;

  double h() const { return 2.0 * L / N; }
  double dt() const { return T / Mt; }

  std::size_t spatial_size() const;
  std::size_t time_size() const { return static_cast<std::size_t>(Mt) + 1; }
  std::size_t size() const { return time_size() * spatial_size(); }

  /// Coordinate of index j along any axis; exactly antisymmetric under j -> N - j.
  double x(int j) const { return (j - N / 2) * h(); }
  double t(int m) const { return m * dt(); }

  MultiIndex unravel(std::size_t node) const;
  std::size_t ravel(const MultiIndex& idx) const;
  /// Spatial coordinates of a flat node index (unused axes are zero).
  std::array<double, 3> coords(std::size_t node) const;

  /// Throws InvalidArgument unless every invariant holds.
  void validate() const;

  bool same_space(const GridSpec& other) const;
  bool operator==(const GridSpec& other) const = default;
};

GridSpec make_grid(int n, double L, int N, double T, int Mt, bool periodic = true);

/// Signed FFT wavenumbers 2*pi*k/(2L) for k in FFT order.
std::vector<double> wavenumbers(int N, double L);

/// Temporal angular frequencies 2*pi*m/T in FFT order, for a period of Mt samples.
std::vector<double> temporal_frequencies(int Mt, double T);

}  // namespace masterheat
