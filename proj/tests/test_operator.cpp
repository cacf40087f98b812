#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "masterheat/error.hpp"
#include "masterheat/moving_planes.hpp"
#include "masterheat/operator.hpp"

using namespace masterheat;

namespace {

/// (i omega + a)^s by polar arithmetic.
cplx polar_symbol(double a, double omega, double s) {
  if (a == 0.0 && omega == 0.0) return 0.0;
  const double r = std::hypot(a, omega);
  const double theta = std::atan2(omega, a);
  return std::polar(std::pow(r, s), s * theta);
}

double max_abs_diff(const Field& a, const Field& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

/// Random band-limited field, periodic in space and over the time window.
Field random_field(const GridSpec& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> wave(-3, 3);
  struct Mode {
    std::array<int, 3> k;
    int w;
    double a, b;
  };
  std::vector<Mode> modes(6);
  for (Mode& m : modes) m = {{wave(rng), wave(rng), wave(rng)}, wave(rng), normal(rng), normal(rng)};
  return sample(
      [&](const std::array<double, 3>& x, double t) {
        double v = 0.0;
        for (const Mode& m : modes) {
          double phase = 2.0 * M_PI * m.w * t / g.T;
          for (int d = 0; d < g.n; ++d) phase += M_PI * m.k[d] * x[d] / g.L;
          v += m.a * std::cos(phase) + m.b * std::sin(phase);
        }
        return v;
      },
      g);
}

}  // namespace

TEST_CASE("symbol_eval examples") {
  const double xi0[] = {0.0};
  const double xi1[] = {1.0};
  CHECK(symbol_eval(xi0, 0.0, 0.5) == cplx(0.0, 0.0));
  for (double s : {0.1, 0.5, 0.9}) CHECK(std::abs(symbol_eval(xi1, 0.0, s) - 1.0) < 1e-15);
  const cplx root_i = symbol_eval(xi0, 1.0, 0.5);
  CHECK(root_i.real() == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
  CHECK(root_i.imag() == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("symbol_eval has nonnegative real part and matches polar form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(0.0, 50.0), w(-50.0, 50.0), s(0.01, 0.99);
  for (int i = 0; i < 500; ++i) {
    const double aa = a(rng), ww = w(rng), ss = s(rng);
    const cplx z = symbol_eval(aa, ww, ss);
    CHECK(z.real() >= 0.0);
    CHECK(std::abs(z - polar_symbol(aa, ww, ss)) <= 1e-12 * std::abs(z));
  }
}

TEST_CASE("apply_spectral: plane waves are eigenfunctions") {
  const GridSpec g = make_grid(2, 4.0, 16, 2.0, 16);
  for (int kx : {0, 1, 3}) {
    for (int mw : {-2, 0, 5}) {
      const double xi = M_PI * kx / g.L, eta = -M_PI * 2.0 / g.L, omega = 2.0 * M_PI * mw / g.T;
      const Field wave = sample(
          [&](const std::array<double, 3>& x, double t) { return std::exp(cplx(0.0, xi * x[0] + eta * x[1] + omega * t)); },
          g);
      const cplx lambda = polar_symbol(xi * xi + eta * eta, omega, 0.5);
      const Field out = apply_spectral(wave, 0.5);
      double worst = 0.0;
      for (std::size_t i = 0; i < out.values().size(); ++i)
        worst = std::max(worst, std::abs(out.values()[i] - lambda * wave.values()[i]));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("apply_spectral: constant to zero, rejects tiny grids") {
  const GridSpec g = make_grid(1, 8.0, 16, 1.0, 8);
  const Field c = Field::from_real(g, std::vector<double>(g.size(), 3.5));
  CHECK(apply_spectral(c, 0.4).max_abs() < 1e-14);
  GridSpec tiny = g;
  tiny.N = 4;
  CHECK_THROWS_AS(apply_spectral(Field(tiny, FieldKind::real), 0.5), InvalidArgument);
}

TEST_CASE("apply_spectral: s = 1 is the heat operator") {
  const GridSpec g = make_grid(1, M_PI, 32, 2.0, 32);
  const double w = 2.0 * M_PI / g.T;
  const Field u = sample([&](const std::array<double, 3>& x, double t) { return std::cos(x[0]) * std::sin(w * t) + std::sin(3 * x[0]); }, g);
  const Field heat = sample(
      [&](const std::array<double, 3>& x, double t) {
        return w * std::cos(x[0]) * std::cos(w * t) + std::cos(x[0]) * std::sin(w * t) + 9.0 * std::sin(3 * x[0]);
      },
      g);
  CHECK(max_abs_diff(apply_spectral(u, 1.0), heat) < 1e-10);
}

TEST_CASE("apply_spectral: s = 0.99 is close to the heat operator") {
  const GridSpec g = make_grid(1, M_PI, 32, 2.0, 32);
  const double w = 2.0 * M_PI / g.T;
  const Field u = sample([&](const std::array<double, 3>& x, double t) { return std::cos(x[0]) * std::sin(w * t) + 0.5 * std::cos(2 * x[0]); }, g);
  const Field heat = apply_spectral(u, 1.0);
  const Field near = apply_spectral(u, 0.99);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < heat.values().size(); ++i) {
    num += std::norm(near.values()[i] - heat.values()[i]);
    den += std::norm(heat.values()[i]);
  }
  CHECK(std::sqrt(num / den) <= 0.05);
}

TEST_CASE("apply_spectral: linearity and adjoint") {
  std::mt19937_64 rng(11);
  const GridSpec g = make_grid(2, 3.0, 16, 1.5, 12);
  const Field u = random_field(g, rng), v = random_field(g, rng);
  const double alpha = 0.7, beta = -1.3;
  std::vector<double> combo(g.size());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = alpha * u.values()[i].real() + beta * v.values()[i].real();
  const Field lhs = apply_spectral(Field::from_real(g, combo), 0.6);
  const Field au = apply_spectral(u, 0.6), av = apply_spectral(v, 0.6);
  double worst = 0.0;
  for (std::size_t i = 0; i < combo.size(); ++i)
    worst = std::max(worst, std::abs(lhs.values()[i] - (alpha * au.values()[i] + beta * av.values()[i])));
  CHECK(worst < 1e-10);

  // <A u, v> = <u, A* v> over the periodic window.
  const Field astar_v = apply_spectral_adjoint(v, 0.6);
  const std::size_t window = static_cast<std::size_t>(g.Mt) * g.spatial_size();
  cplx left = 0.0, right = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    left += au.values()[i] * std::conj(v.values()[i]);
    right += u.values()[i] * std::conj(astar_v.values()[i]);
  }
  CHECK(std::abs(left - right) < 1e-9 * std::abs(left));
}

TEST_CASE("apply_spectral: reflection commutation") {
  std::mt19937_64 rng(5);
  const GridSpec g = make_grid(2, 4.0, 16, 1.0, 8);
  for (int trial = 0; trial < 10; ++trial) {
    const Field u = random_field(g, rng);
    CHECK(max_abs_diff(reflect(apply_spectral(u, 0.5), 0.0), apply_spectral(reflect(u, 0.0), 0.5)) < 1e-10);
  }
}

TEST_CASE("reduction: time-constant fields see the fractional Laplacian") {
  std::mt19937_64 rng(9);
  const GridSpec g = make_grid(1, 4.0, 32, 1.0, 8);
  std::normal_distribution<double> normal;
  std::vector<double> slice(g.spatial_size());
  for (int k = 1; k <= 4; ++k) {
    const double a = normal(rng), b = normal(rng);
    for (std::size_t j = 0; j < slice.size(); ++j) slice[j] += a * std::cos(M_PI * k * g.x(j) / g.L) + b * std::sin(M_PI * k * g.x(j) / g.L);
  }
  std::vector<double> values;
  for (int m = 0; m <= g.Mt; ++m) values.insert(values.end(), slice.begin(), slice.end());
  const Field u = Field::from_real(g, values);
  for (double s : {0.3, 0.75}) {
    const Field out = apply_spectral(u, s);
    const std::vector<double> ref = frac_laplacian_apply(std::span<const double>(slice), g, s);
    for (int m = 0; m <= g.Mt; ++m)
      for (std::size_t j = 0; j < slice.size(); ++j) CHECK(std::abs(out.re(m, j) - ref[j]) < 1e-10);
  }
}

TEST_CASE("reduction: space-constant fields see the Marchaud derivative") {
  const GridSpec g = make_grid(1, 4.0, 16, 2.0, 64);
  const double w = 2.0 * M_PI / g.T;
  auto h = [&](double t) { return std::cos(w * t) + 0.5 * std::sin(2.0 * w * t); };
  const Field u = sample([&](const std::array<double, 3>&, double t) { return h(t); }, g);
  std::vector<double> samples(g.time_size());
  for (int m = 0; m <= g.Mt; ++m) samples[m] = h(g.t(m));
  const double s = 0.5;
  const Field out = apply_spectral(u, s);
  for (int m : {0, 7, 30, 63}) {
    const double ref = marchaud_apply(std::span<const double>(samples), g.dt(), m, s, HistoryPolicy::periodic());
    CHECK(std::abs(out.re(m, 3) - ref) <= 1e-3);
  }
}

TEST_CASE("frac_laplacian_apply examples") {
  const GridSpec g = make_grid(1, M_PI, 16, 1.0, 2);
  std::vector<double> c(g.spatial_size(), 2.0), wave(g.spatial_size()), d2(g.spatial_size());
  for (std::size_t j = 0; j < wave.size(); ++j) {
    wave[j] = std::cos(2.0 * g.x(j)) + std::sin(3.0 * g.x(j));
    d2[j] = 4.0 * std::cos(2.0 * g.x(j)) + 9.0 * std::sin(3.0 * g.x(j));
  }
  for (double v : frac_laplacian_apply(std::span<const double>(c), g, 0.5)) CHECK(std::abs(v) < 1e-14);
  std::vector<cplx> e(g.spatial_size());
  for (std::size_t j = 0; j < e.size(); ++j) e[j] = std::exp(cplx(0.0, 2.0 * g.x(j)));
  const std::vector<cplx> scaled = frac_laplacian_apply(std::span<const cplx>(e), g, 0.5);
  for (std::size_t j = 0; j < e.size(); ++j) CHECK(std::abs(scaled[j] - 2.0 * e[j]) < 1e-13);
  const std::vector<double> lap = frac_laplacian_apply(std::span<const double>(wave), g, 1.0);
  for (std::size_t j = 0; j < e.size(); ++j) CHECK(std::abs(lap[j] - d2[j]) < 1e-10);
  std::vector<double> wrong(5);
  CHECK_THROWS_AS(frac_laplacian_apply(std::span<const double>(wrong), g, 0.5), InvalidArgument);
}

TEST_CASE("marchaud_apply examples") {
  CHECK(marchaud_apply([](double) { return 4.0; }, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(marchaud_apply([](double t) { return t > 0.0 ? t : 0.0; }, 1.0, 0.5) ==
        doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(1e-6));
  for (double beta : {1.0 / 3.0, 0.5, 2.0})
    for (double s : {0.3, 0.5, 0.8}) {
      const double t = 1.3;
      const double ref = boost::math::tgamma(beta + 1.0) / boost::math::tgamma(beta + 1.0 - s) * std::pow(t, beta - s);
      const double v = marchaud_apply([beta](double x) { return x > 0.0 ? std::pow(x, beta) : 0.0; }, t, s);
      CHECK(v == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("marchaud_apply on samples") {
  const int M = 256;
  const double t = 1.0, dt = t / M, s = 0.5;
  std::vector<double> g(M + 1), ones(M + 1, 1.0);
  for (int k = 0; k <= M; ++k) g[k] = k * dt;
  CHECK(std::abs(marchaud_apply(std::span<const double>(ones), dt, M, s, HistoryPolicy::constant_past())) < 1e-12);
  const double v = marchaud_apply(std::span<const double>(g), dt, M, s, HistoryPolicy::zero_past());
  CHECK(v == doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(1e-3));
  CHECK_THROWS_AS(marchaud_apply(std::span<const double>(g.data(), 1), dt, 0, s, HistoryPolicy::zero_past()), InvalidArgument);
  CHECK_THROWS_AS(marchaud_apply(std::span<const double>(g), dt, M + 1, s, HistoryPolicy::zero_past()), InvalidArgument);
}

TEST_CASE("apply_quadrature: constant field and point checks") {
  const GridSpec g = make_grid(1, 8.0, 64, 1.0, 16);
  const Field c = Field::from_real(g, std::vector<double>(g.size(), 2.0));
  OperatorParams p;
  p.s = 0.5;
  p.Cns = analytic_Cns(1, 0.5);
  const QuadratureResult r = apply_quadrature(c, GridPoint{{32, 0, 0}, 10}, p, HistoryPolicy::constant_past());
  CHECK(std::abs(r.value) <= r.tolerance() + 1e-12);
  CHECK_THROWS_AS(apply_quadrature(c, GridPoint{{32, 0, 0}, 17}, p, HistoryPolicy::constant_past()), InvalidArgument);
  CHECK_THROWS_AS(apply_quadrature(c, GridPoint{{64, 0, 0}, 3}, p, HistoryPolicy::constant_past()), InvalidArgument);
  OperatorParams bad = p;
  bad.s = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("apply_quadrature matches apply_spectral on an enveloped wave") {
  const GridSpec g = make_grid(1, 8.0, 128, 2.0, 64);
  const Field f = sample(
      [](const std::array<double, 3>& x, double t) { return std::cos(M_PI * x[0] + M_PI * t) * std::exp(-x[0] * x[0] / 6.25); }, g);
  const double s = 0.5;
  const Field sp = apply_spectral(f, s);
  OperatorParams p;
  p.s = s;
  p.Cns = analytic_Cns(1, s);
  p.quad.far_cut = 16.0;
  std::vector<GridPoint> points;
  for (int j = 52; j <= 76; j += 6) points.push_back({{j, 0, 0}, 40});
  const auto q = apply_quadrature(f, points, p, HistoryPolicy::periodic());
  const double floor = 1e-3 * sp.max_abs();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double ref = sp.re(points[i].m, static_cast<std::size_t>(points[i].index[0]));
    CHECK(std::abs(q[i].value - ref) / std::max(std::abs(ref), floor) <= 5e-2);
  }
}

TEST_CASE("minimum principle at a forced global minimum") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const GridSpec g = make_grid(1, 4.0, 64, 1.0, 16);
  OperatorParams p;
  p.s = 0.5;
  p.Cns = analytic_Cns(1, 0.5);
  for (int trial = 0; trial < 8; ++trial) {
    const int j0 = 16 + static_cast<int>(unit(rng) * 32), m0 = 4 + static_cast<int>(unit(rng) * 12);
    const double x0 = g.x(j0), t0 = g.t(m0);
    const double c1 = unit(rng), c2 = unit(rng), c3 = unit(rng), k = 1 + static_cast<int>(unit(rng) * 3);
    const Field u = sample(
        [&](const std::array<double, 3>& x, double t) {
          const double sx = std::sin(M_PI * k * (x[0] - x0) / (2.0 * g.L));
          const double dt = t - t0;
          return -1.0 + c1 * sx * sx + c2 * dt * dt + c3 * sx * sx * (1.0 + std::cos(3.0 * t));
        },
        g);
    const QuadratureResult r = apply_quadrature(u, GridPoint{{j0, 0, 0}, m0}, p, HistoryPolicy::constant_past());
    CHECK(r.value <= r.tolerance());
  }
}

TEST_CASE("calibrate_Cns") {
  const CalibrationResult c = calibrate_Cns(1, 0.5);
  CHECK(c.Cns > 0.0);
  CHECK(std::isfinite(c.Cns));
  CHECK(c.residual <= 1e-3);
  CHECK(c.Cns == doctest::Approx(0.5 / (boost::math::tgamma(0.5) * std::sqrt(4.0 * M_PI))).epsilon(1e-2));
  CHECK(analytic_Cns(1, 0.5) == doctest::Approx(0.5 / (std::sqrt(M_PI) * std::sqrt(4.0 * M_PI))).epsilon(1e-14));
}
