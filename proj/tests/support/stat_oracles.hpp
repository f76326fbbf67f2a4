#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "getup/core/random.hpp"
#include "getup/stats/statistics.hpp"

// Reference implementations written separately from src/stats.
namespace getup::testing {

// Regularized incomplete beta by Lentz's continued fraction.
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a - 1.0 + m2) * (a + m2));
    d = 1.0 + aa * d;
    c = 1.0 + aa / c;
    d = 1.0 / (std::abs(d) < tiny ? tiny : d);
    c = std::abs(c) < tiny ? tiny : c;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + 1.0 + m2));
    d = 1.0 + aa * d;
    c = 1.0 + aa / c;
    d = 1.0 / (std::abs(d) < tiny ? tiny : d);
    c = std::abs(c) < tiny ? tiny : c;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

inline double inc_beta(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1) / (a + b + 2)) return std::exp(lbt) * betacf(a, b, x) / a;
  return 1.0 - std::exp(lbt) * betacf(b, a, 1 - x) / b;
}

inline double t_two_sided_p(double t, double nu) { return inc_beta(nu / 2, 0.5, nu / (nu + t * t)); }

inline double t_upper_quantile(double tail, double nu) {
  double lo = 0, hi = 1000;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * t_two_sided_p(mid, nu) > tail ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double welch_oracle_p(const std::vector<double>& a, const std::vector<double>& b) {
  auto mv = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / (v.size() - 1)};
  };
  auto [ma, va] = mv(a);
  auto [mb, vb] = mv(b);
  const double qa = va / a.size(), qb = vb / b.size();
  const double t = (ma - mb) / std::sqrt(qa + qb);
  const double nu = (qa + qb) * (qa + qb) / (qa * qa / (a.size() - 1) + qb * qb / (b.size() - 1));
  return t_two_sided_p(t, nu);
}

// A second bootstrap: same draw order, separate bookkeeping, quantiles by
// nth_element and explicit interpolation.
inline Interval brute_bootstrap(const std::vector<double>& v, Rng& rng, int iters, double lo_p, double hi_p) {
  std::vector<double> stats;
  for (int i = 0; i < iters; ++i) {
    std::vector<double> draw;
    for (std::size_t k = 0; k < v.size(); ++k) draw.push_back(v[uniform_index(rng, v.size())]);
    double s = 0;
    for (double x : draw) s += x;
    stats.push_back(s / static_cast<double>(draw.size()));
  }
  auto q = [&](double p) {
    const double pos = p * (iters - 1);
    const auto k = static_cast<std::size_t>(pos);
    std::vector<double> tmp = stats;
    std::nth_element(tmp.begin(), tmp.begin() + k, tmp.end());
    const double a = tmp[k];
    if (k + 1 >= tmp.size()) return a;
    std::nth_element(tmp.begin(), tmp.begin() + k + 1, tmp.end());
    return a + (pos - k) * (tmp[k + 1] - a);
  };
  return {q(lo_p), q(hi_p)};
}

}  // namespace getup::testing
