#include "masterheat/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "masterheat/error.hpp"
#include "masterheat/operator.hpp"

namespace masterheat {

namespace {

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("criticality: non-finite input");
  if (value == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(value, &exponent);
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  Rational result(scaled);
  exponent -= 53;
  const Rational two(2);
  Rational power(1);
  for (int k = 0; k < std::abs(exponent); ++k) power *= two;
  return exponent >= 0 ? Rational(result * power) : Rational(result / power);
}

double odd_power(double t, double beta) { return t >= 0.0 ? std::pow(t, beta) : -std::pow(-t, beta); }

}  // namespace

double r_star(int n, double s, double alpha) {
  if (n < 1) throw InvalidArgument("r_star: n must be at least 1");
  const double denom = n + 2.0 - 2.0 * s;
  if (!(denom > 0.0)) throw InvalidArgument("r_star: n + 2 - 2s must be positive");
  return std::min(1.0 + 4.0 * s * s / n, (n + 2.0 + 2.0 * s - 2.0 * alpha) / denom);
}

Rational r_star(int n, const Rational& s, const Rational& alpha) {
  if (n < 1) throw InvalidArgument("r_star: n must be at least 1");
  const Rational denom = Rational(n + 2) - 2 * s;
  if (denom <= 0) throw InvalidArgument("r_star: n + 2 - 2s must be positive");
  const Rational first = 1 + 4 * s * s / n;
  const Rational second = (Rational(n + 2) + 2 * s - 2 * alpha) / denom;
  return first < second ? first : second;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

Rational parse_rational(const std::string& text) {
  static const std::regex fraction(R"(\s*([+-]?\d+)\s*/\s*(\d+)\s*)");
  static const std::regex decimal(R"(\s*([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?\s*)");
  std::smatch match;
  if (std::regex_match(text, match, fraction)) {
    const boost::multiprecision::cpp_int den(match[2].str());
    if (den == 0) throw InvalidArgument("parse_rational: zero denominator in '" + text + "'");
    return Rational(boost::multiprecision::cpp_int(match[1].str()), den);
  }
  if (std::regex_match(text, match, decimal) && (match[2].length() > 0 || match[3].length() > 0)) {
    std::string digits = match[2].str() + match[3].str();
    // cpp_int reads a leading zero as an octal prefix.
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size()));
    Rational value(boost::multiprecision::cpp_int(digits.empty() ? "0" : digits));
    long long shift = -static_cast<long long>(match[3].length());
    if (match[4].matched) shift += std::stoll(match[4].str());
    if (std::abs(shift) > 4000) throw InvalidArgument("parse_rational: exponent out of range in '" + text + "'");
    for (long long k = 0; k < std::abs(shift); ++k) value = shift > 0 ? Rational(value * 10) : Rational(value / 10);
    return match[1].str() == "-" ? -value : value;
  }
  throw InvalidArgument("parse_rational: cannot parse '" + text + "'");
}

CriticalityInput CriticalityInput::from_doubles(int n, double s, double alpha, double r) {
  CriticalityInput in{n, exact_rational(s), exact_rational(alpha), exact_rational(r)};
  in.validate();
  return in;
}

CriticalityInput CriticalityInput::from_strings(int n, const std::string& s, const std::string& alpha,
                                                const std::string& r) {
  CriticalityInput in{n, parse_rational(s), parse_rational(alpha), parse_rational(r)};
  in.validate();
  return in;
}

void CriticalityInput::validate() const {
  if (n < 1) throw InvalidArgument("criticality: n must be at least 1");
  if (!(s > 0 && s < 1)) throw InvalidArgument("criticality: s must lie in (0, 1)");
  if (!(r > 1)) throw InvalidArgument("criticality: r must exceed 1");
}

Regime classify(const CriticalityInput& input) {
  input.validate();
  const Rational threshold = r_star(input.n, input.s, input.alpha);
  if (input.r < threshold) return Regime::subcritical;
  if (input.r == threshold) return Regime::critical;
  return Regime::supercritical;
}

double cutoff(double z) {
  const double a = std::abs(z);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double q = a - 1.0;
  return 1.0 - q * q * q * (10.0 + q * (-15.0 + 6.0 * q));
}

double cutoff_derivative(double z) {
  const double a = std::abs(z);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double q = a - 1.0;
  const double d = -30.0 * q * q * (q - 1.0) * (q - 1.0);
  return z < 0.0 ? -d : d;
}

double cutoff_second_derivative(double z) {
  const double a = std::abs(z);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double q = a - 1.0;
  return -60.0 * q * (2.0 * q - 1.0) * (q - 1.0);
}

Field test_function(double R, double s, const GridSpec& grid) {
  grid.validate();
  if (!(R > 0.0)) throw InvalidArgument("test_function: R must be positive");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("test_function: s must lie in (0, 1]");
  if (2.0 * R > grid.L) throw InvalidArgument("test_function: R too large for box (2R > L)");
  const double time_scale = std::pow(R, 2.0 * s);
  return sample(
      [&](const std::array<double, 3>& x, double t) {
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        return cutoff(r / R) * cutoff(t / time_scale);
      },
      grid);
}

BlowupReport blowup_monitor(std::span<const double> norms, double dt, int window, double cap) {
  if (window < 5) throw InvalidArgument("blowup_monitor: window shorter than 5 samples");
  if (!(dt > 0.0)) throw InvalidArgument("blowup_monitor: dt must be positive");
  BlowupReport rep;
  const int count = static_cast<int>(norms.size());
  int end = count - 1;
  for (int m = 0; m < count; ++m) {
    if (!std::isfinite(norms[m]) || norms[m] > cap) {
      rep.t_escape = m * dt;
      end = m - 1;
      break;
    }
  }
  if (end - 1 < 5) throw InvalidArgument("blowup_monitor: fewer than 5 interior samples before the norm cap");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.t.resize(end + 1);
  rep.J.assign(end + 1, 0.0);
  rep.Jp.resize(end + 1);
  rep.Jpp.assign(end + 1, nan);
  rep.margin.assign(end + 1, nan);
  for (int m = 0; m <= end; ++m) {
    rep.t[m] = m * dt;
    rep.Jp[m] = 0.5 * norms[m] * norms[m];
    if (m > 0) rep.J[m] = rep.J[m - 1] + 0.5 * dt * (rep.Jp[m - 1] + rep.Jp[m]);
  }
  for (int m = 1; m < end; ++m) {
    rep.Jpp[m] = (rep.Jp[m + 1] - rep.Jp[m - 1]) / (2.0 * dt);
    if (rep.Jp[m] > 0.0) rep.margin[m] = rep.J[m] * rep.Jpp[m] / (rep.Jp[m] * rep.Jp[m]) - 1.0;
  }
  rep.window_last = end - 1;
  rep.window_first = std::max(1, end - window);
  double worst = std::numeric_limits<double>::infinity();
  for (int m = rep.window_first; m <= rep.window_last; ++m)
    if (std::isfinite(rep.margin[m])) worst = std::min(worst, rep.margin[m]);
  if (std::isfinite(worst)) {
    rep.epsilon_margin = worst;
    rep.margin_reported = true;
  }
  rep.blowup_suspected = (rep.margin_reported && rep.epsilon_margin > 0.0) || std::isfinite(rep.t_escape);
  return rep;
}

BlowupReport blowup_monitor(const Trajectory& trajectory, int window, double cap) {
  return blowup_monitor(trajectory.norms, trajectory.dt, window, cap);
}

Barrier barrier_field(const EigenPair& eigen, double R, double beta, const GridSpec& grid) {
  grid.validate();
  if (!grid.same_space(eigen.grid)) throw InvalidArgument("barrier_field: grid differs from the eigenpair grid");
  const double s = eigen.s;
  if (!(s < 1.0)) throw InvalidArgument("barrier_field: requires s < 1");
  if (!(beta > 0.0) || beta >= s) throw InvalidArgument("barrier_field: beta must lie in (0, s)");
  const double odd = 1.0 / beta;
  const double k = std::round((odd - 1.0) / 2.0);
  if (k < 1.0 || std::abs(odd - (2.0 * k + 1.0)) > 1e-9 * odd)
    throw InvalidArgument("barrier_field: beta must equal 1/(2k+1) for a positive integer k");
  const double h = grid.h();
  const double shift_real = R / h;
  const long shift = std::lround(shift_real);
  if (std::abs(shift_real - shift) > 1e-9 * std::max(1.0, shift_real) || shift < 0)
    throw InvalidArgument("barrier_field: R must be a non-negative integer multiple of h");

  Barrier b;
  b.R = R;
  b.beta = beta;
  const std::size_t S = grid.spatial_size();
  b.phi_R.assign(S, 0.0);
  for (std::size_t node = 0; node < S; ++node) {
    if (eigen.phi[node] == 0.0) continue;
    MultiIndex idx = grid.unravel(node);
    idx[0] += static_cast<int>(shift);
    if (idx[0] >= grid.N) throw InvalidArgument("barrier_field: translated ball leaves the box");
    b.phi_R[grid.ravel(idx)] = eigen.phi[node];
  }
  GridSpec vg = grid;
  vg.periodic = false;
  std::vector<double> values(vg.size());
  for (int m = 0; m <= vg.Mt; ++m) {
    const double eta = odd_power(vg.t(m), beta) - 1.0;
    for (std::size_t node = 0; node < S; ++node) values[m * S + node] = b.phi_R[node] * eta;
  }
  b.v = Field::from_real(vg, std::move(values));
  b.C_s = marchaud_apply([beta](double t) { return odd_power(t, beta); }, 1.0, s);
  b.C_T = eigen.lambda1 * (std::pow(vg.T, beta) - 1.0) + b.C_s;
  return b;
}

std::function<double(std::size_t, double)> barrier_history(const Barrier& barrier) {
  return [phi = barrier.phi_R, beta = barrier.beta](std::size_t node, double t) {
    return phi[node] * (odd_power(t, beta) - 1.0);
  };
}

BarrierCheck check_barrier_bound(const Barrier& barrier, const EigenPair& eigen, double s, double Cns,
                                 int time_stride) {
  const GridSpec& grid = barrier.v.grid();
  if (time_stride < 1) throw InvalidArgument("check_barrier_bound: time_stride must be positive");
  OperatorParams params;
  params.s = s;
  params.Cns = Cns > 0.0 ? Cns : analytic_Cns(grid.n, s);
  params.quad.far_cut = 1e4 * std::max(grid.T, 1.0);
  params.quad.nodes_per_panel = 8;
  params.validate();

  std::vector<GridPoint> points;
  std::vector<double> bound;
  for (int m = 0; m <= grid.Mt; m += time_stride) {
    const double t = grid.t(m);
    if (t < 1.0 - 1e-12) continue;
    const double eta = std::pow(t, barrier.beta) - 1.0;
    const double rhs = eigen.lambda1 * eta + barrier.C_s * std::pow(t, barrier.beta - s);
    for (std::size_t node = 0; node < grid.spatial_size(); ++node) {
      auto x = grid.coords(node);
      x[0] -= barrier.R;
      if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] >= 1.0) continue;
      points.push_back({grid.unravel(node), m});
      bound.push_back(rhs);
    }
  }
  const auto results =
      apply_quadrature(barrier.v, points, params, HistoryPolicy::analytic(barrier_history(barrier)));
  BarrierCheck check;
  check.points = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double excess = results[i].value - bound[i];
    if (excess > check.worst_excess) {
      check.worst_excess = excess;
      check.worst_tolerance = results[i].tolerance();
    }
    if (excess > results[i].tolerance()) check.pass = false;
  }
  return check;
}

std::string to_string(ComparisonStatus status) {
  switch (status) {
    case ComparisonStatus::no_admissible_R: return "no admissible R on box";
    case ComparisonStatus::comparison_violated: return "comparison violated";
    case ComparisonStatus::consistent: return "R found; comparison consistent with norm growth";
  }
  return "unknown";
}

NonexistenceReport nonexistence_probe(const WeightSpec& weight, const NonlinearitySpec& nonlin, const Field& u,
                                      const EigenPair& eigen, const ProbeParams& params) {
  if (!u.is_real()) throw InvalidArgument("nonexistence_probe: field must be real");
  const GridSpec& grid = u.grid();
  if (!grid.same_space(eigen.grid)) throw InvalidArgument("nonexistence_probe: grid differs from the eigenpair grid");
  NonexistenceReport rep;
  const std::size_t S = grid.spatial_size();
  for (int m = 0; m <= grid.Mt; ++m)
    for (std::size_t node = 0; node < S; ++node) rep.M = std::max(rep.M, u.re(m, node));
  rep.T = std::pow(rep.M + 1.0, 1.0 / params.beta);
  rep.C_s = marchaud_apply([beta = params.beta](double t) { return odd_power(t, beta); }, 1.0, params.s);
  rep.C_T = eigen.lambda1 * rep.M + rep.C_s;
  rep.window_covers_T = grid.T >= rep.T * (1.0 - 1e-12);
  const double phi_max = *std::max_element(eigen.phi.begin(), eigen.phi.end());
  rep.contradiction_identity_gap = std::abs(phi_max * (std::pow(rep.T, params.beta) - 1.0) - rep.M);

  double first_norm = l2_norm(u, 0);
  double last_norm = l2_norm(u, grid.Mt);
  rep.norm_growth = last_norm > first_norm;

  const double h = grid.h();
  int m_first = 0;
  while (m_first <= grid.Mt && grid.t(m_first) < 1.0 - 1e-12) ++m_first;
  int m_last = grid.Mt;
  while (m_last >= m_first && grid.t(m_last) > rep.T * (1.0 + 1e-12)) --m_last;
  if (m_first > m_last) return rep;

  const double eigen_max_x1 = [&] {
    double r = 0.0;
    for (std::size_t node = 0; node < S; ++node)
      if (eigen.phi[node] > 0.0) r = std::max(r, eigen.grid.coords(node)[0]);
    return r;
  }();
  for (long shift = 0;; ++shift) {
    const double R = shift * h;
    if (R + eigen_max_x1 >= grid.x(grid.N - 1) + 0.5 * h) break;
    // Minimum of u over B_1(R e_1) x [1, T].
    double m_T = std::numeric_limits<double>::infinity();
    for (int m = m_first; m <= m_last; ++m)
      for (std::size_t node = 0; node < S; ++node) {
        auto x = grid.coords(node);
        x[0] -= R;
        if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0) m_T = std::min(m_T, u.re(m, node));
      }
    if (!std::isfinite(m_T)) continue;
    const double a_edge = weight({R - 1.0, 0.0, 0.0});
    if (!(m_T > 0.0) || !(a_edge * nonlin(m_T) > rep.C_T)) continue;
    rep.R = R;
    rep.m_T = m_T;
    break;
  }
  if (!std::isfinite(rep.R)) return rep;

  const long shift = std::lround(rep.R / h);
  const auto ball = [&](std::size_t node) {
    auto x = grid.coords(node);
    x[0] -= rep.R;
    return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0;
  };
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (int m = m_first; m <= m_last; ++m) {
    const double eta = std::pow(grid.t(m), params.beta) - 1.0;
    for (std::size_t node = 0; node < S; ++node) {
      if (!ball(node)) continue;
      MultiIndex idx = grid.unravel(node);
      idx[0] -= static_cast<int>(shift);
      const double phi_R = idx[0] >= 0 ? eigen.phi[grid.ravel(idx)] : 0.0;
      rep.min_gap = std::min(rep.min_gap, u.re(m, node) - phi_R * eta);
    }
  }
  rep.status = rep.min_gap > 0.0 ? ComparisonStatus::consistent : ComparisonStatus::comparison_violated;
  return rep;
}

}  // namespace masterheat
