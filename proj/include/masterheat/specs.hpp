#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "masterheat/grid.hpp"

namespace masterheat {

/// Structured description of the weight a(x). Every form depends on x_1 only.
struct WeightSpec {
  enum class Form { odd_monomial, signed_power, magnitude_power, tabulated };

  Form form = Form::magnitude_power;
  /// Growth exponent: k for odd_monomial, alpha otherwise.
  double exponent = 0.0;
  double coefficient = 1.0;
  /// Sorted (x_1, a) pairs, linearly interpolated and held constant outside.
  std::vector<std::pair<double, double>> table;

  bool increasing_in_x1 = false;
  bool increasing_for_positive_x1 = false;
  bool even_in_x1 = false;
  bool radial = false;
  /// Constant C_a in |a(x)| <= C_a (1 + |x_1|^alpha).
  double bound_constant = 1.0;

  double operator()(const std::array<double, 3>& x) const;

  static WeightSpec odd_monomial(double k, double coefficient = 1.0);
  static WeightSpec signed_power(double alpha, double coefficient = 1.0);
  static WeightSpec magnitude_power(double alpha, double coefficient = 1.0, int n = 1);
  static WeightSpec tabulated(std::vector<std::pair<double, double>> table);

  /// Throws InvalidArgument for contradictory flags.
  void validate() const;
};

struct WeightAudit {
  bool passed = true;
  std::vector<std::string> failures;
};

/// Checks the declared flags against samples of a on the grid nodes.
WeightAudit audit(const WeightSpec& weight, const GridSpec& grid);

/// Structured description of the nonlinearity f(u).
struct NonlinearitySpec {
  enum class Form { power, tabulated_lipschitz, zero };

  Form form = Form::power;
  /// Power form is f(u) = |u|^{r-1} u.
  double r = 2.0;
  std::vector<std::pair<double, double>> table;
  std::pair<double, double> lipschitz_on{-1e6, 1e6};
  bool nondecreasing = true;
  bool f0_zero = true;
  bool fprime0_zero = true;
  /// Constant C_f in f(u) >= C_f |u|^r on u >= 0.
  double lower_bound_constant = 1.0;

  double operator()(double u) const;
  /// One-sided derivative at u: closed form for power, centered difference otherwise.
  double derivative(double u) const;
  /// Local Lipschitz constant on [lo, hi]; finite for every valid spec.
  double lipschitz_constant(double lo, double hi) const;

  static NonlinearitySpec power(double r);
  static NonlinearitySpec tabulated(std::vector<std::pair<double, double>> table);
  static NonlinearitySpec zero();

  void validate() const;
};

}  // namespace masterheat
