#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "getup/core/random.hpp"
#include "getup/env/types.hpp"

namespace getup {

struct SuccessStatistics {
  std::vector<double> per_seed_rates;
  std::vector<int> episodes_per_seed;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across seeds
  std::optional<double> ci_low, ci_high;
  int n_seeds() const { return static_cast<int>(per_seed_rates.size()); }
  int n_episodes_per_seed() const;  // smallest group; groups are usually equal
};

// One group of episodes per seed.
SuccessStatistics success_rate(const std::vector<std::vector<EpisodeResult>>& per_seed);
SuccessStatistics success_rate(const std::map<std::uint64_t, std::vector<bool>>& flags_by_seed);
// Same, from already aggregated per-seed rates.
SuccessStatistics from_rates(const std::vector<double>& rates, std::vector<int> episodes_per_seed = {});

enum class BootstrapMethod {
  percentile,
  // Percentile interval at the nominal level widened by the small-sample
  // factor sqrt(n/(n-1)) * t_{n-1} / z (Hesterberg's expanded percentile).
  expanded_percentile,
};
std::string to_string(BootstrapMethod m);
BootstrapMethod parse_bootstrap_method(const std::string& s);

struct BootstrapOptions {
  int iterations = 10000;
  double level = 0.95;
  BootstrapMethod method = BootstrapMethod::expanded_percentile;
  // Resample pooled episodes instead of seed-level rates (sensitivity only).
  bool episode_level = false;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Lower and upper tail probabilities used for a sample of size n.
Interval bootstrap_tails(int n, const BootstrapOptions& opts);

// Linear interpolation between order statistics (type 7).
double quantile_sorted(const std::vector<double>& sorted, double p);

// Resamples `values` with replacement `iterations` times; each resample
// draws n indices in order with uniform_index.
Interval bootstrap_ci(const std::vector<double>& values, Rng& rng, const BootstrapOptions& opts = {});

// Fills ci_low/ci_high. Episode-level mode needs the raw flags.
void attach_ci(SuccessStatistics& s, Rng& rng, const BootstrapOptions& opts = {},
               const std::vector<bool>* pooled_episodes = nullptr);

// Percentile interval of mean(a*) - mean(b*) with a and b resampled
// independently.
Interval bootstrap_delta_ci(const std::vector<double>& a, const std::vector<double>& b, Rng& rng,
                            const BootstrapOptions& opts = {});

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

// Two-sided. Throws DegenerateVariance when both samples are constant.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct Comparison {
  double p = 1.0;
  bool exact = false;  // both samples constant; p is 1 when equal, 0 otherwise
  bool significant(double alpha = 0.05) const { return p < alpha; }
};
Comparison compare_samples(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace getup
