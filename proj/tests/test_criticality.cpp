#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "masterheat/criticality.hpp"
#include "masterheat/error.hpp"
#include "masterheat/operator.hpp"

using namespace masterheat;

namespace {

/// Marchaud derivative of the odd extension of t^beta at t = 1, in closed form:
/// c_s [B(beta + 1, s - beta) - B(-s, beta + 1)], the second Beta by continuation.
double odd_root_marchaud(double beta, double s) {
  auto B = [](double a, double b) { return std::tgamma(a) * std::tgamma(b) / std::tgamma(a + b); };
  return s / std::tgamma(1.0 - s) * (B(beta + 1.0, s - beta) - B(-s, beta + 1.0));
}

Trajectory constant_trajectory(const GridSpec& g, double value) {
  Trajectory tr;
  tr.grid = g;
  tr.dt = g.dt();
  for (int m = 0; m <= g.Mt; ++m) tr.push(std::vector<double>(g.spatial_size(), value));
  return tr;
}

}  // namespace

TEST_CASE("r_star table") {
  CHECK(r_star(1, 0.5, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r_star(2, 0.5, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
  for (double s : {0.2, 0.5, 0.8}) CHECK(r_star(1, s, 2.0 * s) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r_star(1, Rational(1, 2), Rational(0)) == Rational(2));
  CHECK(r_star(2, Rational(1, 2), Rational(0)) == Rational(3, 2));
  CHECK(r_star(3, Rational(1, 3), Rational(2, 3)) == Rational(1));
}

TEST_CASE("r_star monotonicity sweeps") {
  for (int n = 1; n <= 3; ++n)
    for (double s = 0.05; s < 1.0; s += 0.05) {
      double prev = std::numeric_limits<double>::infinity();
      for (double alpha = 0.0; alpha <= 3.0; alpha += 0.1) {
        const double r = r_star(n, s, alpha);
        CHECK(r <= prev);
        prev = r;
      }
      // First branch alone: 1 + 4 s^2 / n increases with s; with alpha large the second branch is active.
      CHECK(r_star(n, s + 0.01, -100.0) > r_star(n, s, -100.0));
    }
}

TEST_CASE("classify examples") {
  CHECK(classify(CriticalityInput::from_strings(1, "0.5", "0", "1.5")) == Regime::subcritical);
  CHECK(classify(CriticalityInput::from_strings(1, "1/2", "0", "2")) == Regime::critical);
  CHECK(classify(CriticalityInput::from_strings(1, "0.5", "0", "3")) == Regime::supercritical);
  CHECK(to_string(Regime::critical) == "critical");
}

TEST_CASE("classify is exact on rational ties") {
  // (n+2+2s-2 alpha)/(n+2-2s) with s = 1/3, alpha = 1/7, n = 2: exact tie at r = r*.
  const Rational s(1, 3), alpha(1, 7);
  const Rational rs = r_star(2, s, alpha);
  CHECK(classify({2, s, alpha, rs}) == Regime::critical);
  CHECK(classify({2, s, alpha, rs + Rational(1, 1000000000)}) == Regime::supercritical);
  CHECK(classify({2, s, alpha, rs - Rational(1, 1000000000)}) == Regime::subcritical);
}

TEST_CASE("classify agrees with r_star on random rationals") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> num(1, 99), n_dist(1, 3);
  for (int i = 0; i < 300; ++i) {
    const int n = n_dist(rng);
    const Rational s(num(rng), 100);
    const Rational alpha(num(rng) - 20, 50);
    const Rational r = Rational(1) + Rational(num(rng), 40);
    const Rational rs = r_star(n, s, alpha);
    const Regime regime = classify({n, s, alpha, r});
    CHECK((regime == Regime::subcritical) == (r < rs));
    CHECK((regime == Regime::critical) == (r == rs));
  }
}

TEST_CASE("criticality input parsing") {
  CHECK(parse_rational("3/2") == Rational(3, 2));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("-1.5e-1") == Rational(-3, 20));
  CHECK(parse_rational("7") == Rational(7));
  CHECK_THROWS_AS(parse_rational("x"), InvalidArgument);
  CHECK_THROWS_AS(parse_rational("1/0"), InvalidArgument);
  CHECK(CriticalityInput::from_doubles(1, 0.1, 0.0, 2.0).s != Rational(1, 10));
  CHECK_THROWS_AS(CriticalityInput::from_strings(1, "1", "0", "2").validate(), InvalidArgument);
  CHECK_THROWS_AS(CriticalityInput::from_strings(1, "0.5", "0", "1").validate(), InvalidArgument);
  CHECK_THROWS_AS(CriticalityInput::from_strings(0, "0.5", "0", "2").validate(), InvalidArgument);
}

TEST_CASE("eigen_ball: s = 1 limit reproduces the Dirichlet eigenvalue") {
  const EigenPair e = eigen_ball(1.0, make_grid(1, 4.0, 256, 1.0, 2));
  CHECK(std::abs(e.lambda1 / (M_PI * M_PI / 4.0) - 1.0) <= 0.02);
}

TEST_CASE("eigen_ball: s = 0.5 pair") {
  const GridSpec g = make_grid(1, 4.0, 128, 1.0, 2);
  const EigenPair e = eigen_ball(0.5, g);
  const EigenPair fine = eigen_ball(0.5, make_grid(1, 4.0, 256, 1.0, 2));
  CHECK(e.lambda1 > 0.0);
  CHECK(std::abs(fine.lambda1 / e.lambda1 - 1.0) <= 0.01);
  CHECK(*std::max_element(e.phi.begin(), e.phi.end()) == 1.0);
  for (std::size_t node = 0; node < e.phi.size(); ++node) {
    const double x = g.coords(node)[0];
    if (std::abs(x) >= 1.0) CHECK(e.phi[node] == 0.0);
    else CHECK(e.phi[node] > 0.0);
  }
  // Residual of the projected operator on interior nodes, relative to ||phi||.
  const std::vector<double> Aphi = frac_laplacian_apply(std::span<const double>(e.phi), g, 0.5);
  double res = 0.0, norm = 0.0;
  for (std::size_t node = 0; node < e.phi.size(); ++node) {
    norm += e.phi[node] * e.phi[node];
    if (std::abs(g.coords(node)[0]) < 1.0) res += std::pow(Aphi[node] - e.lambda1 * e.phi[node], 2);
  }
  CHECK(std::sqrt(res) <= 1e-6 * std::sqrt(norm));
  CHECK_THROWS_AS(eigen_ball(0.5, make_grid(1, 1.5, 64, 1.0, 2)), InvalidArgument);
}

TEST_CASE("barrier_field construction") {
  const GridSpec g = make_grid(1, 8.0, 128, 4.0, 64, false);
  const EigenPair e = eigen_ball(0.5, g);
  const Barrier b = barrier_field(e, 3.0, 1.0 / 3.0, g);
  const GridSpec& vg = b.v.grid();
  for (int m = 0; m <= vg.Mt; ++m) {
    double top = -1e300, bottom = 1e300;
    for (std::size_t node = 0; node < vg.spatial_size(); ++node) {
      top = std::max(top, b.v.re(m, node));
      bottom = std::min(bottom, b.v.re(m, node));
    }
    const double eta = std::cbrt(vg.t(m)) - 1.0;
    if (eta >= 0.0) CHECK(top == doctest::Approx(eta).epsilon(1e-14));
    else CHECK(bottom == doctest::Approx(eta).epsilon(1e-14));
  }
  const int m1 = vg.Mt / 4;
  REQUIRE(vg.t(m1) == 1.0);
  for (std::size_t node = 0; node < vg.spatial_size(); ++node) CHECK(b.v.re(m1, node) == 0.0);

  CHECK(b.C_s == doctest::Approx(odd_root_marchaud(1.0 / 3.0, 0.5)).epsilon(1e-9));
  CHECK(b.C_T == doctest::Approx(e.lambda1 * (std::cbrt(4.0) - 1.0) + b.C_s).epsilon(1e-14));

  CHECK_THROWS_AS(barrier_field(e, 3.0, 0.6, g), InvalidArgument);
  CHECK_THROWS_AS(barrier_field(e, 3.0, 0.25, g), InvalidArgument);
  CHECK_THROWS_AS(barrier_field(e, 3.01, 1.0 / 3.0, g), InvalidArgument);
  CHECK_THROWS_AS(barrier_field(e, 7.5, 1.0 / 3.0, g), InvalidArgument);
}

TEST_CASE("barrier satisfies the supersolution estimate") {
  const GridSpec g = make_grid(1, 8.0, 128, 4.0, 64, false);
  const EigenPair e = eigen_ball(0.5, g);
  const Barrier b = barrier_field(e, 3.0, 1.0 / 3.0, g);
  const BarrierCheck chk = check_barrier_bound(b, e, 0.5, 0.0, 4);
  CHECK(chk.points > 0);
  CHECK(chk.pass);
  CHECK(chk.worst_excess <= chk.worst_tolerance);
}

TEST_CASE("nonexistence_probe") {
  const GridSpec g = make_grid(1, 8.0, 128, 4.0, 64, false);
  const EigenPair e = eigen_ball(0.5, g);

  SUBCASE("barrier fed as u gives the contradiction identity") {
    const Barrier b = barrier_field(e, 3.0, 1.0 / 3.0, g);
    const NonexistenceReport rep = nonexistence_probe(WeightSpec::odd_monomial(1.0), NonlinearitySpec::power(2.0), b.v, e, {});
    CHECK(rep.M == doctest::Approx(std::cbrt(4.0) - 1.0).epsilon(1e-14));
    CHECK(rep.T == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rep.contradiction_identity_gap <= 1e-12);
  }

  SUBCASE("bounded field with a tiny weight is vacuous") {
    const Field u = sample([](const std::array<double, 3>& x, double) { return 0.5 + 0.1 * std::cos(x[0]); }, g);
    const NonexistenceReport rep =
        nonexistence_probe(WeightSpec::odd_monomial(1.0, 1e-6), NonlinearitySpec::power(2.0), u, e, {});
    CHECK(rep.status == ComparisonStatus::no_admissible_R);
    CHECK(to_string(rep.status) == "no admissible R on box");
    CHECK_FALSE(rep.norm_growth);
  }
}

TEST_CASE("nonexistence_probe on a solver trajectory with a growing weight") {
  // Weight rising from 0 at x_1 = 0 to 3 at x_1 = 2, constant beyond; linear f keeps the run finite.
  const GridSpec g = make_grid(1, 8.0, 128, 1.1, 64);
  std::vector<double> u0(g.spatial_size());
  for (std::size_t j = 0; j < u0.size(); ++j) {
    const double x = g.x(static_cast<int>(j)) - 4.0;
    u0[j] = std::exp(-x * x / 1e4);
  }
  SolverConfig cfg;
  cfg.T = g.T;
  cfg.Mt = g.Mt;
  const WeightSpec a = WeightSpec::tabulated({{0.0, 0.0}, {2.0, 3.0}});
  const NonlinearitySpec f = NonlinearitySpec::power(1.0);
  const SolveResult res = picard_solve(u0, g, a, f, 0.5, cfg);
  REQUIRE(res.report.stop_reason == "completed");
  GridSpec eg = g;
  eg.Mt = 2;
  const EigenPair e = eigen_ball(0.5, eg);
  const NonexistenceReport rep = nonexistence_probe(a, f, res.trajectory.as_field(), e, {});
  CHECK(std::isfinite(rep.R));
  CHECK(rep.norm_growth);
  CHECK(rep.status == ComparisonStatus::consistent);
  CHECK(to_string(rep.status) == "R found; comparison consistent with norm growth");
}

TEST_CASE("cutoff and test_function") {
  for (double z = -3.0; z <= 3.0; z += 0.01) {
    const double c = cutoff(z);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    if (std::abs(z) <= 1.0) CHECK(c == 1.0);
    if (std::abs(z) >= 2.0) CHECK(c == 0.0);
    if (z >= 0.0) CHECK(cutoff(z + 0.01) <= c);
  }
  // C^2 joins at the plateau edges.
  for (double z : {1.0, 2.0}) {
    CHECK(std::abs(cutoff_derivative(z)) < 1e-14);
    CHECK(std::abs(cutoff_second_derivative(z)) < 1e-12);
  }
  // Derivatives against centered differences.
  for (double z = 1.05; z < 2.0; z += 0.1) {
    const double d = 1e-6;
    CHECK(cutoff_derivative(z) == doctest::Approx((cutoff(z + d) - cutoff(z - d)) / (2 * d)).epsilon(1e-6));
    CHECK(cutoff_second_derivative(z) ==
          doctest::Approx((cutoff_derivative(z + d) - cutoff_derivative(z - d)) / (2 * d)).epsilon(1e-5));
  }

  const GridSpec g = make_grid(2, 8.0, 32, 8.0, 32);
  const double R = 2.0, s = 0.5;
  const Field phi = test_function(R, s, g);
  for (int m = 0; m <= g.Mt; ++m)
    for (std::size_t node = 0; node < g.spatial_size(); ++node) {
      const auto x = g.coords(node);
      const double r = std::hypot(x[0], x[1]);
      const double v = phi.re(m, node);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (r <= R && g.t(m) <= std::pow(R, 2 * s)) CHECK(v == 1.0);
      if (r >= 2 * R || g.t(m) >= 2 * std::pow(R, 2 * s)) CHECK(v == 0.0);
      if (m > 0) CHECK(v <= phi.re(m - 1, node));
    }
  CHECK_THROWS_AS(test_function(4.5, s, g), InvalidArgument);
}

TEST_CASE("rescaling: constant u") {
  const GridSpec g = make_grid(1, 16.0, 256, 1.0, 16);
  const Trajectory tr = constant_trajectory(g, 2.0);
  const std::vector<double> R{2.0, 4.0, 8.0};
  RescalingParams p;
  p.s = 0.5;
  p.alpha = 1.0;
  const RescalingReport rep =
      rescaling_diagnostic(tr, WeightSpec::magnitude_power(1.0), NonlinearitySpec::power(2.0), R, p);
  CHECK(rep.degenerate);
  CHECK(std::isnan(rep.lhs_slope));
  CHECK(rep.predicted_rhs_slope == 2.0);
  CHECK(std::abs(rep.rhs_slope - rep.predicted_rhs_slope) <= 0.1 * rep.predicted_rhs_slope);
  CHECK_FALSE(rep.insufficient_range);
  CHECK(rep.regime == "window");

  const std::vector<double> narrow{2.0, 2.5, 3.0};
  CHECK(rescaling_diagnostic(tr, WeightSpec::magnitude_power(1.0), NonlinearitySpec::power(2.0), narrow, p).insufficient_range);
  const std::vector<double> two{2.0, 4.0};
  CHECK_THROWS_AS(rescaling_diagnostic(tr, WeightSpec::magnitude_power(1.0), NonlinearitySpec::power(2.0), two, p),
                  InvalidArgument);
  const std::vector<double> big{2.0, 4.0, 9.0};
  CHECK_THROWS_AS(rescaling_diagnostic(tr, WeightSpec::magnitude_power(1.0), NonlinearitySpec::power(2.0), big, p),
                  InvalidArgument);
}

TEST_CASE("rescaling: constant u over the full time support has vanishing LHS") {
  const GridSpec g = make_grid(1, 8.0, 128, 4.0, 64);
  const Trajectory tr = constant_trajectory(g, 1.5);
  const std::vector<double> R{0.5, 1.0, 2.0};
  RescalingParams p;
  p.s = 0.5;
  const RescalingReport rep = rescaling_diagnostic(tr, WeightSpec::magnitude_power(0.0), NonlinearitySpec::power(2.0), R, p);
  CHECK(rep.regime == "full");
  for (const RescalingPoint& pt : rep.points) CHECK(std::abs(pt.lhs) <= 1e-2 * std::abs(pt.rhs));
}

TEST_CASE("rescaling: identity on a subcritical trajectory") {
  const GridSpec g = make_grid(1, 8.0, 128, 4.0, 128);
  std::vector<double> u0(g.spatial_size());
  for (std::size_t j = 0; j < u0.size(); ++j) {
    const double x = g.x(static_cast<int>(j));
    u0[j] = 0.2 * std::exp(-x * x / 2.0);
  }
  SolverConfig cfg;
  cfg.T = g.T;
  cfg.Mt = g.Mt;
  const WeightSpec a = WeightSpec::magnitude_power(0.0);
  const NonlinearitySpec f = NonlinearitySpec::power(1.5);
  const SolveResult res = picard_solve(u0, g, a, f, 0.5, cfg);
  REQUIRE(res.report.stop_reason == "completed");
  const std::vector<double> R{0.5, 1.0, 2.0};
  RescalingParams p;
  p.s = 0.5;
  const RescalingReport rep = rescaling_diagnostic(res.trajectory, a, f, R, p);
  for (const RescalingPoint& pt : rep.points) {
    CHECK(pt.relative_gap <= 0.05);
    CHECK(pt.coverage == 1.0);
  }
  CHECK(rep.regime == "full");
}

TEST_CASE("blowup_monitor: zero and constant norms") {
  const std::vector<double> zero(20, 0.0);
  const BlowupReport z = blowup_monitor(zero, 0.1, 10, 1e6);
  CHECK_FALSE(z.margin_reported);
  CHECK_FALSE(z.blowup_suspected);
  for (double j : z.J) CHECK(j == 0.0);

  const std::vector<double> flat(20, 2.0);
  const BlowupReport c = blowup_monitor(flat, 0.1, 10, 1e6);
  for (std::size_t m = 0; m < c.J.size(); ++m) CHECK(c.J[m] == doctest::Approx(2.0 * 0.1 * m).epsilon(1e-13));
  CHECK(c.margin_reported);
  CHECK(c.epsilon_margin == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_FALSE(c.blowup_suspected);

  CHECK_THROWS_AS(blowup_monitor(flat, 0.1, 4, 1e6), InvalidArgument);
  CHECK_THROWS_AS(blowup_monitor(std::vector<double>(5, 1.0), 0.1, 5, 1e6), InvalidArgument);
}

TEST_CASE("blowup_monitor: analytic blow-up profile") {
  // ||u||^2 = 2 (1 - t)^{-2}: J' = (1-t)^{-2}, J = 1/(1-t) - 1, J'' = 2 (1-t)^{-3};
  // J J'' / J'^2 - 1 = 2 (1 - (1 - t)) - 1 = 1 - 2 (1 - t) > 0 for t > 1/2.
  const double dt = 1e-3;
  std::vector<double> norms;
  for (int m = 0; m < 990; ++m) norms.push_back(std::sqrt(2.0) / (1.0 - m * dt));
  const BlowupReport rep = blowup_monitor(norms, dt, 10, 1e6);
  CHECK(rep.margin_reported);
  const double t_mid = 0.5 * (rep.t[rep.window_first] + rep.t[rep.window_last]);
  CHECK(rep.epsilon_margin == doctest::Approx(1.0 - 2.0 * (1.0 - rep.t[rep.window_first])).epsilon(2e-2));
  CHECK(rep.epsilon_margin > 0.0);
  CHECK(rep.blowup_suspected);
  CHECK(std::isnan(rep.t_escape));
  CHECK(t_mid > 0.9);

  norms.push_back(1e7);
  const BlowupReport capped = blowup_monitor(norms, dt, 10, 1e6);
  CHECK(capped.t_escape == doctest::Approx(990 * dt).epsilon(1e-14));
  CHECK(capped.window_last < 989);
  CHECK(capped.blowup_suspected);
}

TEST_CASE("blowup_monitor: nondecreasing norms give convex J") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> step(0.0, 0.3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> norms{0.5};
    for (int m = 1; m < 40; ++m) norms.push_back(norms.back() + step(rng));
    const BlowupReport rep = blowup_monitor(norms, 0.05, 10, 1e6);
    for (double jpp : rep.Jpp)
      if (std::isfinite(jpp)) CHECK(jpp >= -1e-12);
  }
}

TEST_CASE("blowup_monitor: decaying linear run") {
  const GridSpec g = make_grid(1, 8.0, 64, 2.0, 64);
  std::vector<double> u0(g.spatial_size());
  for (std::size_t j = 0; j < u0.size(); ++j) u0[j] = std::exp(-g.x(static_cast<int>(j)) * g.x(static_cast<int>(j)));
  SolverConfig cfg;
  cfg.T = g.T;
  cfg.Mt = g.Mt;
  const SolveResult res = picard_solve(u0, g, WeightSpec::magnitude_power(0.0), NonlinearitySpec::zero(), 0.5, cfg);
  const BlowupReport rep = blowup_monitor(res.trajectory, 10, 1e6);
  CHECK(rep.margin_reported);
  CHECK(rep.epsilon_margin < 0.0);
  CHECK_FALSE(rep.blowup_suspected);
}
