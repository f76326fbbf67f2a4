#include "getup/stats/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "getup/core/error.hpp"

namespace getup {

int SuccessStatistics::n_episodes_per_seed() const {
  if (episodes_per_seed.empty()) return 0;
  return *std::min_element(episodes_per_seed.begin(), episodes_per_seed.end());
}

SuccessStatistics from_rates(const std::vector<double>& rates, std::vector<int> episodes_per_seed) {
  if (rates.empty()) throw ArgumentError("success statistics need at least one seed");
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("success rate outside [0, 1]");
  }
  if (!episodes_per_seed.empty() && episodes_per_seed.size() != rates.size())
    throw ArgumentError("episode counts do not match the rates");
  SuccessStatistics s;
  s.per_seed_rates = rates;
  s.episodes_per_seed = std::move(episodes_per_seed);
  const double n = static_cast<double>(rates.size());
  s.mean = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rates) ss += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

SuccessStatistics success_rate(const std::map<std::uint64_t, std::vector<bool>>& flags_by_seed) {
  if (flags_by_seed.empty()) throw ArgumentError("success_rate: no results");
  std::vector<double> rates;
  std::vector<int> counts;
  for (const auto& [seed, flags] : flags_by_seed) {
    if (flags.empty()) throw ArgumentError("success_rate: seed " + std::to_string(seed) + " has no episodes");
    const auto wins = std::count(flags.begin(), flags.end(), true);
    rates.push_back(static_cast<double>(wins) / static_cast<double>(flags.size()));
    counts.push_back(static_cast<int>(flags.size()));
  }
  return from_rates(rates, counts);
}

SuccessStatistics success_rate(const std::vector<std::vector<EpisodeResult>>& per_seed) {
  std::map<std::uint64_t, std::vector<bool>> by_seed;
  for (std::size_t i = 0; i < per_seed.size(); ++i) {
    auto& flags = by_seed[i];
    for (const auto& r : per_seed[i]) flags.push_back(r.success);
  }
  return success_rate(by_seed);
}

std::string to_string(BootstrapMethod m) {
  return m == BootstrapMethod::percentile ? "percentile" : "expanded_percentile";
}

BootstrapMethod parse_bootstrap_method(const std::string& s) {
  if (s == "percentile") return BootstrapMethod::percentile;
  if (s == "expanded_percentile") return BootstrapMethod::expanded_percentile;
  throw ArgumentError("unknown bootstrap method '" + s + "' (percentile, expanded_percentile)");
}

Interval bootstrap_tails(int n, const BootstrapOptions& opts) {
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw ArgumentError("bootstrap level must lie in (0, 1)");
  const double a = 0.5 * (1.0 - opts.level);
  if (opts.method == BootstrapMethod::percentile || n < 2) return {a, 1.0 - a};
  const boost::math::students_t t(n - 1);
  const double tq = boost::math::quantile(boost::math::complement(t, a));
  const double lo = boost::math::cdf(boost::math::normal(), -std::sqrt(n / (n - 1.0)) * tq);
  return {lo, 1.0 - lo};
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

namespace {

void check_iterations(const BootstrapOptions& opts) {
  if (opts.iterations < 1) throw ArgumentError("bootstrap needs at least one iteration");
}

double resampled_mean(const std::vector<double>& v, Rng& rng) {
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) sum += v[uniform_index(rng, v.size())];
  return sum / static_cast<double>(v.size());
}

Interval percentiles(std::vector<double>& stats, const Interval& tails) {
  std::sort(stats.begin(), stats.end());
  return {quantile_sorted(stats, tails.low), quantile_sorted(stats, tails.high)};
}

}  // namespace

Interval bootstrap_ci(const std::vector<double>& values, Rng& rng, const BootstrapOptions& opts) {
  if (values.size() < 2) throw ArgumentError("bootstrap_ci needs at least two values");
  check_iterations(opts);
  const Interval tails = bootstrap_tails(static_cast<int>(values.size()), opts);
  std::vector<double> means(static_cast<std::size_t>(opts.iterations));
  for (double& m : means) m = resampled_mean(values, rng);
  return percentiles(means, tails);
}

void attach_ci(SuccessStatistics& s, Rng& rng, const BootstrapOptions& opts, const std::vector<bool>* pooled) {
  Interval ci;
  if (opts.episode_level) {
    if (!pooled) throw ArgumentError("episode-level bootstrap needs the episode outcomes");
    std::vector<double> v(pooled->begin(), pooled->end());
    ci = bootstrap_ci(v, rng, opts);
  } else {
    ci = bootstrap_ci(s.per_seed_rates, rng, opts);
  }
  // Guard against rounding in the interpolation.
  s.ci_low = std::min(ci.low, s.mean);
  s.ci_high = std::max(ci.high, s.mean);
}

Interval bootstrap_delta_ci(const std::vector<double>& a, const std::vector<double>& b, Rng& rng,
                            const BootstrapOptions& opts) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("bootstrap_delta_ci needs at least two values per sample");
  check_iterations(opts);
  const Interval tails = bootstrap_tails(static_cast<int>(std::min(a.size(), b.size())), opts);
  std::vector<double> deltas(static_cast<std::size_t>(opts.iterations));
  for (double& d : deltas) {
    const double ma = resampled_mean(a, rng);
    d = ma - resampled_mean(b, rng);
  }
  return percentiles(deltas, tails);
}

namespace {

std::pair<double, double> mean_var(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, ss / (n - 1.0)};
}

}  // namespace

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("welch_t_test needs at least two values per sample");
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (!(se2 > 0.0)) throw DegenerateVariance("welch_t_test: both samples have zero variance");
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 / (sa * sa / (a.size() - 1.0) + sb * sb / (b.size() - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

Comparison compare_samples(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return {welch_t_test(a, b).p, false};
  } catch (const DegenerateVariance&) {
    return {a.front() == b.front() ? 1.0 : 0.0, true};
  }
}

}  // namespace getup
