#include <cmath>

#include "masterheat/error.hpp"
#include "masterheat/fft.hpp"
#include "masterheat/operator.hpp"

namespace masterheat {

cplx symbol_eval(double xi_squared, double omega, double s) {
  if (xi_squared == 0.0 && omega == 0.0) return {0.0, 0.0};
  return std::pow(cplx(xi_squared, omega), s);
}

cplx symbol_eval(std::span<const double> xi, double omega, double s) {
  double xi2 = 0.0;
  for (double k : xi) xi2 += k * k;
  return symbol_eval(xi2, omega, s);
}

namespace {

std::vector<double> mode_xi_squared(const GridSpec& grid) {
  const auto xi = wavenumbers(grid.N, grid.L);
  const std::size_t spatial = grid.spatial_size();
  std::vector<double> a(spatial);
  for (std::size_t node = 0; node < spatial; ++node) {
    const MultiIndex k = grid.unravel(node);
    double sum = 0.0;
    for (int axis = 0; axis < grid.n; ++axis) sum += xi[k[axis]] * xi[k[axis]];
    a[node] = sum;
  }
  return a;
}

Field apply_space_time_symbol(const Field& field, double s, double time_sign) {
  const GridSpec& grid = field.grid();
  if (grid.N < 8) throw InvalidArgument("apply_spectral: grid too small (N < 8)");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("apply_spectral: s must lie in (0, 1]");

  const std::size_t spatial = grid.spatial_size();
  const std::size_t periodic_size = static_cast<std::size_t>(grid.Mt) * spatial;
  std::vector<cplx> data(field.values().begin(), field.values().begin() + periodic_size);

  std::vector<int> dims{grid.Mt};
  for (int axis = 0; axis < grid.n; ++axis) dims.push_back(grid.N);
  Fft fft(dims);
  fft.forward(data);

  const auto a = mode_xi_squared(grid);
  const auto omega = temporal_frequencies(grid.Mt, grid.T);
  const bool has_nyquist = grid.Mt % 2 == 0;
  for (int m = 0; m < grid.Mt; ++m) {
    const bool nyquist = has_nyquist && m == grid.Mt / 2;
    for (std::size_t node = 0; node < spatial; ++node) {
      cplx mult = symbol_eval(a[node], time_sign * omega[m], s);
      if (nyquist) mult = 0.5 * (mult + symbol_eval(a[node], -time_sign * omega[m], s));
      data[m * spatial + node] *= mult;
    }
  }
  fft.backward(data);

  std::vector<cplx> out(grid.size());
  std::copy(data.begin(), data.end(), out.begin());
  std::copy(data.begin(), data.begin() + spatial, out.begin() + periodic_size);
  return Field(grid, std::move(out), field.kind());
}

}  // namespace

Field apply_spectral(const Field& field, double s) { return apply_space_time_symbol(field, s, 1.0); }

Field apply_spectral_adjoint(const Field& field, double s) { return apply_space_time_symbol(field, s, -1.0); }

std::vector<cplx> frac_laplacian_apply(std::span<const cplx> slice, const GridSpec& grid, double s) {
  if (slice.size() != grid.spatial_size()) throw InvalidArgument("frac_laplacian_apply: slice shape mismatch");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("frac_laplacian_apply: s must lie in (0, 1]");
  std::vector<cplx> data(slice.begin(), slice.end());
  Fft fft(std::vector<int>(grid.n, grid.N));
  fft.forward(data);
  const auto a = mode_xi_squared(grid);
  for (std::size_t node = 0; node < data.size(); ++node) data[node] *= a[node] == 0.0 ? 0.0 : std::pow(a[node], s);
  fft.backward(data);
  return data;
}

std::vector<double> frac_laplacian_apply(std::span<const double> slice, const GridSpec& grid, double s) {
  std::vector<cplx> in(slice.begin(), slice.end());
  const auto out = frac_laplacian_apply(std::span<const cplx>(in), grid, s);
  std::vector<double> result(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) result[k] = out[k].real();
  return result;
}

Field frac_laplacian_apply(const Field& field, double s) {
  const GridSpec& grid = field.grid();
  const std::size_t spatial = grid.spatial_size();
  std::vector<cplx> out(grid.size());
  for (int m = 0; m <= grid.Mt; ++m) {
    const auto slice = frac_laplacian_apply(field.slice(m), grid, s);
    std::copy(slice.begin(), slice.end(), out.begin() + m * spatial);
  }
  return Field(grid, std::move(out), field.kind());
}

}  // namespace masterheat
