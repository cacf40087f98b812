#include "numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "masterheat/error.hpp"

namespace masterheat::detail {

namespace {

template <int P>
GaussRule build_rule() {
  using rule = boost::math::quadrature::gauss<double, P>;
  const auto& abscissa = rule::abscissa();
  const auto& weights = rule::weights();
  GaussRule out;
  for (std::size_t k = 0; k < abscissa.size(); ++k) {
    if (abscissa[k] == 0.0) {
      out.x.push_back(0.0);
      out.w.push_back(weights[k]);
      continue;
    }
    out.x.push_back(-abscissa[k]);
    out.w.push_back(weights[k]);
    out.x.push_back(abscissa[k]);
    out.w.push_back(weights[k]);
  }
  return out;
}

GaussRule make_rule(int nodes) {
  switch (nodes) {
    case 4: return build_rule<4>();
    case 5: return build_rule<5>();
    case 6: return build_rule<6>();
    case 7: return build_rule<7>();
    case 8: return build_rule<8>();
    case 9: return build_rule<9>();
    case 10: return build_rule<10>();
    case 15: return build_rule<15>();
    case 20: return build_rule<20>();
    case 30: return build_rule<30>();
    default: throw InvalidArgument("unsupported Gauss rule size " + std::to_string(nodes));
  }
}

}  // namespace

const GaussRule& gauss_rule(int nodes) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, make_rule(nodes)).first;
  return it->second;
}

Stencil first_derivative(int m, int last, double dt, bool periodic) {
  Stencil st;
  const double scale = 1.0 / (12.0 * dt);
  if (periodic) {
    const std::array<int, 5> off{-2, -1, 0, 1, 2};
    const std::array<double, 5> c{1.0, -8.0, 0.0, 8.0, -1.0};
    for (int k = 0; k < 5; ++k) {
      st.index[k] = ((m + off[k]) % last + last) % last;
      st.coef[k] = c[k] * scale;
    }
    return st;
  }
  if (last < 4) throw InvalidArgument("derivative stencil needs at least 5 samples");
  static constexpr std::array<std::array<double, 5>, 5> table{{
      {-25.0, 48.0, -36.0, 16.0, -3.0},
      {-3.0, -10.0, 18.0, -6.0, 1.0},
      {1.0, -8.0, 0.0, 8.0, -1.0},
      {-1.0, 6.0, -18.0, 10.0, 3.0},
      {3.0, -16.0, 36.0, -48.0, 25.0},
  }};
  int start = m - 2;
  int row = 2;
  if (m < 2) {
    start = 0;
    row = m;
  } else if (m > last - 2) {
    start = last - 4;
    row = m - start;
  }
  for (int k = 0; k < 5; ++k) {
    st.index[k] = start + k;
    st.coef[k] = table[row][k] * scale;
  }
  return st;
}

Stencil second_derivative_periodic(int j, int N, double h) {
  Stencil st;
  const std::array<double, 5> c{-1.0, 16.0, -30.0, 16.0, -1.0};
  const double scale = 1.0 / (12.0 * h * h);
  for (int k = 0; k < 5; ++k) {
    st.index[k] = ((j + k - 2) % N + N) % N;
    st.coef[k] = c[k] * scale;
  }
  return st;
}

TimeStencil cubic_in_time(double time, int last, double dt, bool periodic) {
  TimeStencil st;
  const double pos = time / dt;
  int base = static_cast<int>(std::floor(pos)) - 1;
  if (!periodic) base = std::clamp(base, 0, last - 3);
  for (int k = 0; k < 4; ++k) {
    double c = 1.0;
    for (int q = 0; q < 4; ++q)
      if (q != k) c *= (pos - (base + q)) / static_cast<double>(k - q);
    st.coef[k] = c;
    st.index[k] = periodic ? ((base + k) % last + last) % last : base + k;
  }
  return st;
}

}  // namespace masterheat::detail
