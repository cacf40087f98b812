#include "masterheat/specs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "masterheat/error.hpp"

namespace masterheat {

namespace {

double interpolate(const std::vector<std::pair<double, double>>& table, double x) {
  if (x <= table.front().first) return table.front().second;
  if (x >= table.back().first) return table.back().second;
  auto hi = std::upper_bound(table.begin(), table.end(), x,
                             [](double value, const auto& entry) { return value < entry.first; });
  auto lo = hi - 1;
  const double w = (x - lo->first) / (hi->first - lo->first);
  return (1.0 - w) * lo->second + w * hi->second;
}

void check_table(const std::vector<std::pair<double, double>>& table, const char* what) {
  if (table.size() < 2) throw InvalidArgument(std::string(what) + ": table needs at least two entries");
  for (std::size_t k = 1; k < table.size(); ++k) {
    if (!(table[k].first > table[k - 1].first)) {
      throw InvalidArgument(std::string(what) + ": table abscissae must be strictly increasing");
    }
  }
  for (const auto& [x, y] : table) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidArgument(std::string(what) + ": non-finite table entry");
  }
}

}  // namespace

double WeightSpec::operator()(const std::array<double, 3>& x) const {
  const double x1 = x[0];
  switch (form) {
    case Form::odd_monomial:
    case Form::signed_power: {
      if (x1 == 0.0) return 0.0;
      const double magnitude = std::pow(std::abs(x1), exponent);
      return coefficient * (x1 > 0.0 ? magnitude : -magnitude);
    }
    case Form::magnitude_power:
      if (exponent == 0.0) return coefficient;
      return coefficient * std::pow(std::abs(x1), exponent);
    case Form::tabulated:
      return interpolate(table, x1);
  }
  return 0.0;
}

WeightSpec WeightSpec::odd_monomial(double k, double coefficient) {
  WeightSpec w;
  w.form = Form::odd_monomial;
  w.exponent = k;
  w.coefficient = coefficient;
  w.increasing_in_x1 = coefficient > 0.0;
  w.increasing_for_positive_x1 = coefficient > 0.0;
  w.bound_constant = std::abs(coefficient);
  return w;
}

WeightSpec WeightSpec::signed_power(double alpha, double coefficient) {
  WeightSpec w = odd_monomial(alpha, coefficient);
  w.form = Form::signed_power;
  return w;
}

WeightSpec WeightSpec::magnitude_power(double alpha, double coefficient, int n) {
  WeightSpec w;
  w.form = Form::magnitude_power;
  w.exponent = alpha;
  w.coefficient = coefficient;
  w.even_in_x1 = true;
  w.radial = n == 1;
  w.increasing_for_positive_x1 = alpha > 0.0 && coefficient > 0.0;
  w.bound_constant = std::abs(coefficient);
  return w;
}

WeightSpec WeightSpec::tabulated(std::vector<std::pair<double, double>> table) {
  WeightSpec w;
  w.form = Form::tabulated;
  w.table = std::move(table);
  double bound = 0.0;
  for (const auto& [x, a] : w.table) bound = std::max(bound, std::abs(a));
  w.bound_constant = bound;
  return w;
}

void WeightSpec::validate() const {
  if (form == Form::tabulated) check_table(table, "weight");
  if (!std::isfinite(exponent) || exponent < 0.0) throw InvalidArgument("weight: growth exponent must be >= 0");
  if (form == Form::odd_monomial && exponent <= 0.0) throw InvalidArgument("weight: odd monomial needs k > 0");
  if (increasing_in_x1 && (even_in_x1 || radial)) {
    throw InvalidArgument("weight: a globally increasing weight cannot also be even or radial in x_1");
  }
  if (radial && !even_in_x1) throw InvalidArgument("weight: a radial weight is necessarily even in x_1");
}

WeightAudit audit(const WeightSpec& weight, const GridSpec& grid) {
  WeightAudit report;
  const std::size_t spatial = grid.spatial_size();
  auto fail = [&](const std::string& msg) {
    report.passed = false;
    if (report.failures.size() < 16) report.failures.push_back(msg);
  };
  for (std::size_t node = 0; node < spatial; ++node) {
    MultiIndex idx = grid.unravel(node);
    const auto x = grid.coords(node);
    const double a = weight(x);
    if (idx[0] + 1 < grid.N) {
      auto next = idx;
      next[0] += 1;
      const double a_next = weight(grid.coords(grid.ravel(next)));
      if (weight.increasing_in_x1 && !(a_next > a)) fail("not increasing in x_1 at node " + std::to_string(node));
      if (weight.increasing_for_positive_x1 && x[0] > 0.0 && !(a_next > a)) {
        fail("not increasing on x_1 > 0 at node " + std::to_string(node));
      }
    }
    if (weight.even_in_x1 && idx[0] > 0) {
      auto mirror = idx;
      mirror[0] = grid.N - idx[0];
      if (weight(grid.coords(grid.ravel(mirror))) != a) fail("not even in x_1 at node " + std::to_string(node));
    }
  }
  return report;
}

double NonlinearitySpec::operator()(double u) const {
  switch (form) {
    case Form::power:
      if (u == 0.0) return 0.0;
      return std::pow(std::abs(u), r - 1.0) * u;
    case Form::tabulated_lipschitz:
      return interpolate(table, u);
    case Form::zero:
      return 0.0;
  }
  return 0.0;
}

double NonlinearitySpec::derivative(double u) const {
  switch (form) {
    case Form::power:
      if (u == 0.0) return r > 1.0 ? 0.0 : (r == 1.0 ? 1.0 : std::numeric_limits<double>::infinity());
      return r * std::pow(std::abs(u), r - 1.0);
    case Form::tabulated_lipschitz: {
      constexpr double step = 1e-6;
      return ((*this)(u + step) - (*this)(u - step)) / (2.0 * step);
    }
    case Form::zero:
      return 0.0;
  }
  return 0.0;
}

double NonlinearitySpec::lipschitz_constant(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  switch (form) {
    case Form::power: {
      const double m = std::max(std::abs(lo), std::abs(hi));
      if (r >= 1.0) return r * std::pow(m, r - 1.0);
      return std::numeric_limits<double>::infinity();
    }
    case Form::tabulated_lipschitz: {
      double best = 0.0;
      for (std::size_t k = 1; k < table.size(); ++k) {
        if (table[k].first < lo || table[k - 1].first > hi) continue;
        best = std::max(best, std::abs(table[k].second - table[k - 1].second) / (table[k].first - table[k - 1].first));
      }
      return best;
    }
    case Form::zero:
      return 0.0;
  }
  return 0.0;
}

NonlinearitySpec NonlinearitySpec::power(double r) {
  NonlinearitySpec f;
  f.form = Form::power;
  f.r = r;
  f.nondecreasing = r > 0.0;
  f.f0_zero = true;
  f.fprime0_zero = r > 1.0;
  return f;
}

NonlinearitySpec NonlinearitySpec::tabulated(std::vector<std::pair<double, double>> table) {
  NonlinearitySpec f;
  f.form = Form::tabulated_lipschitz;
  f.table = std::move(table);
  f.lipschitz_on = {f.table.front().first, f.table.back().first};
  f.nondecreasing = true;
  for (std::size_t k = 1; k < f.table.size(); ++k) f.nondecreasing = f.nondecreasing && f.table[k].second >= f.table[k - 1].second;
  f.f0_zero = f.table.front().first <= 0.0 && f.table.back().first >= 0.0 && f(0.0) == 0.0;
  f.fprime0_zero = false;
  return f;
}

NonlinearitySpec NonlinearitySpec::zero() {
  NonlinearitySpec f;
  f.form = Form::zero;
  f.r = 0.0;
  f.fprime0_zero = true;
  f.lower_bound_constant = 0.0;
  return f;
}

void NonlinearitySpec::validate() const {
  if (form == Form::power && !(r > 0.0)) throw InvalidArgument("nonlinearity: power exponent must be positive");
  if (form == Form::tabulated_lipschitz) check_table(table, "nonlinearity");
  if (!(lipschitz_on.first < lipschitz_on.second)) throw InvalidArgument("nonlinearity: empty Lipschitz interval");
  if (f0_zero && (*this)(0.0) != 0.0) throw InvalidArgument("nonlinearity: declared f(0) = 0 but f(0) != 0");
}

}  // namespace masterheat
