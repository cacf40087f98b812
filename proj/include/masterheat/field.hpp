#pragma once

#include <complex>
#include <concepts>
#include <type_traits>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "masterheat/grid.hpp"

namespace masterheat {

using cplx = std::complex<double>;

enum class FieldKind { real, complex };

/// Immutable samples of a function on a GridSpec, shape (Mt+1, N, ..., N).
///
/// Real fields keep a zero imaginary part. Construction rejects non-finite
/// samples, so every Field in circulation is finite.
class Field {
 public:
  Field(const GridSpec& grid, FieldKind kind);
  Field(const GridSpec& grid, std::vector<cplx> values, FieldKind kind);

  static Field from_real(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  FieldKind kind() const { return kind_; }
  bool is_real() const { return kind_ == FieldKind::real; }

  cplx at(int m, std::size_t node) const { return values_[offset(m) + node]; }
  double re(int m, std::size_t node) const { return values_[offset(m) + node].real(); }

  std::span<const cplx> values() const { return values_; }
  std::span<const cplx> slice(int m) const;
  std::vector<double> real_slice(int m) const;
  double max_abs() const;

 private:
  std::size_t offset(int m) const { return static_cast<std::size_t>(m) * grid_.spatial_size(); }

  GridSpec grid_;
  FieldKind kind_;
  std::vector<cplx> values_;
};

using RealExpression = std::function<double(const std::array<double, 3>& x, double t)>;
using ComplexExpression = std::function<cplx(const std::array<double, 3>& x, double t)>;

/// Pointwise evaluation at every grid node. Throws NumericalError naming the
/// offending (m, node) index when the expression is not finite there.
Field sample(const RealExpression& expr, const GridSpec& grid);
Field sample(const ComplexExpression& expr, const GridSpec& grid);

/// Dispatches a callable on its return type: complex results give a complex Field.
template <class F>
  requires std::invocable<const F&, const std::array<double, 3>&, double>
Field sample(const F& expr, const GridSpec& grid) {
  using R = std::invoke_result_t<const F&, const std::array<double, 3>&, double>;
  if constexpr (std::is_convertible_v<R, double>) {
    return sample(RealExpression(expr), grid);
  } else {
    return sample(ComplexExpression(expr), grid);
  }
}

/// Discrete L2 norm of slice m: h^{n/2} times the Euclidean norm.
double l2_norm(const Field& field, int m);
double l2_norm(std::span<const double> slice, const GridSpec& grid);
double l2_norm(std::span<const cplx> slice, const GridSpec& grid);

struct SlowlyIncreasingReport {
  double integral_estimate = 0.0;
  double tail_bound = 0.0;
  double cap = 0.0;
  bool finite = true;
  /// Membership is judged on a truncated window plus a tail bound, not on the full past.
  bool truncated_window = true;
};

struct SlowlyIncreasingOptions {
  double cap = 1e6;
  /// Declared sup of |u| on the unsampled past; negative means "use max |u| of the field".
  double growth_bound = -1.0;
};

/// Trapezoidal estimate of the history integral
///   int int |u(x,tau)| exp(-|x|^2 / 4(t-tau)) / (1 + (t-tau)^{n/2+1+s}) dx dtau
/// over tau in [t - truncation_T, t] intersected with the sampled window.
SlowlyIncreasingReport slowly_increasing_check(const Field& field, double s, int t_index, double truncation_T,
                                               const SlowlyIncreasingOptions& options = {});

}  // namespace masterheat
