#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "masterheat/field.hpp"
#include "masterheat/specs.hpp"

namespace masterheat {

/// Plane x_1 = lambda.
struct PlaneReflection {
  double lambda = 0.0;

  /// 2 (lambda + L) / h: the reflected index of node j is k - j when this is an integer.
  double index_sum(const GridSpec& grid) const { return 2.0 * (lambda + grid.L) / grid.h(); }
  bool commensurate(const GridSpec& grid) const;
};

struct Reflected {
  Field field;
  /// True when 2 lambda was off the grid and values were linearly interpolated.
  bool interpolated = false;
};

/// u_lambda(x, t) = u(2 lambda - x_1, x', t), periodic in x_1.
Reflected reflect_checked(const Field& field, double lambda);
Field reflect(const Field& field, double lambda);

/// w_lambda = u_lambda - u.
Field w_lambda(const Field& field, double lambda);

/// (f(u_lambda) - f(u)) / (u_lambda - u), or f'(u) when the values are within tol.
double lipschitz_quotient(const NonlinearitySpec& nonlin, double u_value, double ulam_value, double tol = 1e-12);

/// Nodes of Sigma_lambda = {x_1 < lambda} whose mirror image stays inside the box
/// without periodic wrap-around.
std::vector<int> sigma_lambda_columns(const GridSpec& grid, double lambda, int margin = 0);

enum class ResidualRoute { spectral, quadrature };

struct ResidualOptions {
  double s = 0.5;
  ResidualRoute route = ResidualRoute::spectral;
  /// Length of the constant past prepended before the spectral route; zero picks
  /// a length over which the slowest box mode decays below 1e-8.
  double pad_time = 0.0;
  /// Normalization for the quadrature route; zero uses the analytic constant.
  double Cns = 0.0;
  /// Nodes kept away from the plane and the box edge.
  int margin = 1;
};

struct ResidualSite {
  std::size_t node = 0;
  int m = 0;
  double value = 0.0;
};

struct ResidualReport {
  double lambda = 0.0;
  double min_residual = std::numeric_limits<double>::infinity();
  ResidualSite argmin;
  std::vector<ResidualSite> sites;
};

/// r = (d/dt - Laplacian)^s w_lambda - a(x) M_lambda w_lambda on the interior of Sigma_lambda.
/// The field's past is taken constant, matching mild solutions.
ResidualReport inequality_residual(const Field& field, const WeightSpec& weight, const NonlinearitySpec& nonlin,
                                   double lambda, const ResidualOptions& options = {});

struct ViolationSite {
  std::array<double, 3> x{};
  double t = 0.0;
  double lambda = 0.0;
  double w = 0.0;
};

struct LambdaMargin {
  double lambda = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  bool pass = true;
};

struct MonotonicityReport {
  /// Smallest w_lambda - required_margin over every tested site.
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<ViolationSite> violation_sites;
  std::vector<double> lambdas_tested;
  std::vector<LambdaMargin> per_lambda;
  bool pass() const { return violation_sites.empty(); }
};

/// Restricts the monotonicity scan; x_1 bounds are inclusive, time indices inclusive.
struct Region {
  double x1_min = -std::numeric_limits<double>::infinity();
  double x1_max = std::numeric_limits<double>::infinity();
  int m_first = 0;
  int m_last = std::numeric_limits<int>::max();
  double required_margin = 0.0;
  /// Violations stored in full; further ones are only counted.
  std::size_t max_recorded = 1000;
};

MonotonicityReport monotonicity_check(const Field& field, std::span<const double> lambdas, const Region& region = {});

enum class SymmetryMode { even_x1, radial };

struct SymmetryReport {
  SymmetryMode mode = SymmetryMode::even_x1;
  double max_deviation = 0.0;
  double threshold = 0.0;
  bool pass = true;
  /// Whether the weight declares the tested symmetry.
  bool weight_consistent = true;
  std::size_t classes = 0;
};

/// Even mode compares u(-x_1, x') with u(x_1, x'); radial mode compares nodes with
/// equal integer |j - N/2|^2 (exact radii). Passes when the deviation is at most tol ||u||_inf.
SymmetryReport symmetry_check(const Field& field, const WeightSpec& weight, SymmetryMode mode, double tol);

}  // namespace masterheat
