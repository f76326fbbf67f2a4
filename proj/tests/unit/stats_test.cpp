#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "../support/fixtures.hpp"
#include "../support/stat_oracles.hpp"
#include "getup/core/error.hpp"
#include "getup/stats/protocol.hpp"
#include "getup/stats/report.hpp"
#include "getup/stats/statistics.hpp"

namespace getup {
namespace {

using namespace getup::testing;


// ---- success_rate

TEST(SuccessRate, MeanAndPopulationStd) {
  const auto s = from_rates({1.0, 0.5});
  EXPECT_DOUBLE_EQ(s.mean, 0.75);
  EXPECT_DOUBLE_EQ(s.std, 0.25);
  const auto z = success_rate(std::map<std::uint64_t, std::vector<bool>>{{0, {false, false}}, {1, {false}}});
  EXPECT_EQ(z.mean, 0.0);
  EXPECT_EQ(z.std, 0.0);
  EXPECT_EQ(z.n_episodes_per_seed(), 1);
}

TEST(SuccessRate, Errors) {
  EXPECT_THROW(success_rate(std::map<std::uint64_t, std::vector<bool>>{}), ArgumentError);
  EXPECT_THROW(success_rate(std::map<std::uint64_t, std::vector<bool>>{{0, {}}}), ArgumentError);
  EXPECT_THROW(from_rates({1.2}), ArgumentError);
}

TEST(SuccessRate, GroupsEpisodesBySeed) {
  std::vector<std::vector<EpisodeResult>> groups(2);
  for (int i = 0; i < 4; ++i) groups[0].push_back(EpisodeResult{.success = i < 3});
  for (int i = 0; i < 2; ++i) groups[1].push_back(EpisodeResult{.success = false});
  const auto s = success_rate(groups);
  ASSERT_EQ(s.n_seeds(), 2);
  EXPECT_DOUBLE_EQ(s.per_seed_rates[0], 0.75);
  EXPECT_DOUBLE_EQ(s.per_seed_rates[1], 0.0);
}

TEST(SuccessRate, BernoulliMonteCarlo) {
  Rng rng(1);
  std::map<std::uint64_t, std::vector<bool>> flags;
  for (std::uint64_t s = 0; s < 10; ++s)
    for (int e = 0; e < 100; ++e) flags[s].push_back(uniform01(rng) < 0.8);
  EXPECT_NEAR(success_rate(flags).mean, 0.8, 0.04);
}

// ---- bootstrap

TEST(Bootstrap, ZeroVarianceIsAPoint) {
  Rng rng(2);
  const auto ci = bootstrap_ci(std::vector<double>(10, 0.9), rng);
  EXPECT_DOUBLE_EQ(ci.low, 0.9);
  EXPECT_DOUBLE_EQ(ci.high, 0.9);
}

TEST(Bootstrap, NeedsTwoValues) {
  Rng rng(3);
  EXPECT_THROW(bootstrap_ci({0.5}, rng), ArgumentError);
  EXPECT_THROW(bootstrap_ci({}, rng), ArgumentError);
}

TEST(Bootstrap, PercentileMatchesBruteForce) {
  const std::vector<double> v{0.6, 0.7, 0.8, 0.9};
  BootstrapOptions o;
  o.method = BootstrapMethod::percentile;
  Rng a(4), b(4);
  const auto ci = bootstrap_ci(v, a, o);
  const auto ref = brute_bootstrap(v, b, 10000, 0.025, 0.975);
  EXPECT_NEAR(ci.low, ref.low, 1e-12);
  EXPECT_NEAR(ci.high, ref.high, 1e-12);
}

TEST(Bootstrap, ExpandedTailsMatchIndependentQuantiles) {
  for (int n : {2, 4, 10, 30}) {
    const double tq = t_upper_quantile(0.025, n - 1.0);
    const double lo = 0.5 * std::erfc(std::sqrt(n / (n - 1.0)) * tq / std::sqrt(2.0));
    const auto tails = bootstrap_tails(n, {});
    EXPECT_NEAR(tails.low, lo, 1e-9) << n;
    EXPECT_NEAR(tails.high, 1 - lo, 1e-9) << n;
  }
  // frozen: Phi(-sqrt(10/9) * t_{0.975, 9})
  EXPECT_NEAR(bootstrap_tails(10, {}).low, 0.008550639023037153, 1e-10);
}

TEST(Bootstrap, ExpandedMatchesBruteForce) {
  const std::vector<double> v{0.6, 0.7, 0.8, 0.9, 0.55, 0.95};
  const auto tails = bootstrap_tails(6, {});
  Rng a(5), b(5);
  const auto ci = bootstrap_ci(v, a);
  const auto ref = brute_bootstrap(v, b, 10000, tails.low, tails.high);
  EXPECT_NEAR(ci.low, ref.low, 1e-12);
  EXPECT_NEAR(ci.high, ref.high, 1e-12);
}

TEST(Bootstrap, DeterministicAndScaleEquivariant) {
  const std::vector<double> v{0.2, 0.4, 0.5, 0.9, 0.7};
  Rng a(6), b(6), c(6);
  const auto x = bootstrap_ci(v, a);
  const auto y = bootstrap_ci(v, b);
  EXPECT_EQ(x.low, y.low);
  EXPECT_EQ(x.high, y.high);
  std::vector<double> half;
  for (double r : v) half.push_back(0.5 * r);
  const auto z = bootstrap_ci(half, c);
  EXPECT_NEAR(z.low, 0.5 * x.low, 1e-12);
  EXPECT_NEAR(z.high, 0.5 * x.high, 1e-12);
  EXPECT_LE(z.low, z.high);
}

TEST(Bootstrap, AttachKeepsMeanInside) {
  Rng rng(7);
  auto s = from_rates({0.1, 0.9, 0.5});
  attach_ci(s, rng);
  EXPECT_LE(*s.ci_low, s.mean);
  EXPECT_GE(*s.ci_high, s.mean);
}

TEST(Bootstrap, EpisodeLevelUsesPooledOutcomes) {
  Rng rng(8);
  auto s = from_rates({0.5, 0.5});
  BootstrapOptions o;
  o.episode_level = true;
  EXPECT_THROW(attach_ci(s, rng, o), ArgumentError);
  const std::vector<bool> pooled{true, false, true, false};
  attach_ci(s, rng, o, &pooled);
  EXPECT_LT(*s.ci_low, 0.5);  // seed level would be the point 0.5
}

// Reduced version of the acceptance coverage run.
TEST(Bootstrap, CoverageNearNominal) {
  Rng rng(9);
  BootstrapOptions o;
  o.iterations = 2000;
  int covered = 0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> rates;
    for (int s = 0; s < 10; ++s) {
      int wins = 0;
      for (int e = 0; e < 100; ++e) wins += uniform01(rng) < 0.8;
      rates.push_back(wins / 100.0);
    }
    const auto ci = bootstrap_ci(rates, rng, o);
    covered += ci.low <= 0.8 && 0.8 <= ci.high;
  }
  EXPECT_GT(covered / double(reps), 0.90);
  EXPECT_LT(covered / double(reps), 0.99);
}

TEST(Bootstrap, DeltaOfIdenticalConstantsIsZero) {
  Rng rng(10);
  const auto ci = bootstrap_delta_ci({0.5, 0.5, 0.5}, {0.5, 0.5}, rng);
  EXPECT_EQ(ci.low, 0.0);
  EXPECT_EQ(ci.high, 0.0);
}

// ---- Welch

TEST(Welch, MatchesFrozenReference) {
  const auto r = welch_t_test({0.8, 0.9, 0.85}, {0.6, 0.65, 0.7});
  EXPECT_NEAR(r.t, 4.898979485566359, 1e-12);
  EXPECT_NEAR(r.dof, 4.0, 1e-12);
  EXPECT_NEAR(r.p, 0.008049893100837698, 1e-9);
  const auto u = welch_t_test({0.1, 0.5, 0.3, 0.9, 0.7}, {0.2, 0.25, 0.3});
  EXPECT_NEAR(u.t, 1.732050807568877, 1e-12);
  EXPECT_NEAR(u.dof, 4.3252595155709335, 1e-12);
  EXPECT_NEAR(u.p, 0.1528921704543315, 1e-9);
}

TEST(Welch, MatchesIndependentTCdf) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a, b;
    const int na = 2 + static_cast<int>(uniform_index(rng, 10));
    const int nb = 2 + static_cast<int>(uniform_index(rng, 10));
    for (int k = 0; k < na; ++k) a.push_back(uniform01(rng));
    for (int k = 0; k < nb; ++k) b.push_back(0.3 * uniform01(rng) + 0.2);
    EXPECT_NEAR(welch_t_test(a, b).p, welch_oracle_p(a, b), 1e-9);
  }
}

TEST(Welch, SymmetryAndIdentity) {
  const std::vector<double> a{0.8, 0.9, 0.85}, b{0.6, 0.65, 0.7, 0.9};
  const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
  const auto same = welch_t_test(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_DOUBLE_EQ(same.p, 1.0);
}

TEST(Welch, DegenerateVariance) {
  EXPECT_THROW(welch_t_test({0.5, 0.5}, {0.7, 0.7}), DegenerateVariance);
  EXPECT_THROW(welch_t_test({0.5}, {0.7, 0.1}), ArgumentError);
  const auto eq = compare_samples({0.5, 0.5}, {0.5, 0.5, 0.5});
  EXPECT_TRUE(eq.exact);
  EXPECT_EQ(eq.p, 1.0);
  EXPECT_EQ(compare_samples({0.9, 0.9}, {0.3, 0.3}).p, 0.0);
}

TEST(Welch, UniformUnderTheNull) {
  Rng rng(12);
  std::vector<double> ps;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> a(10), b(10);
    for (double& x : a) x = standard_normal(rng);
    for (double& x : b) x = standard_normal(rng);
    ps.push_back(welch_t_test(a, b).p);
  }
  std::sort(ps.begin(), ps.end());
  double ks = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ks = std::max({ks, (i + 1.0) / ps.size() - ps[i], ps[i] - double(i) / ps.size()});
  }
  EXPECT_LT(ks, 0.05);
}

// ---- protocols

// Success probability per (training set, evaluation morph); fails on demand.
class FakeRunner : public ProtocolRunner {
 public:
  std::function<double(const std::vector<std::string>&, const std::string&)> prob =
      [](const std::vector<std::string>& set, const std::string& m) {
        return std::find(set.begin(), set.end(), m) != set.end() ? 0.9 : 0.4;
      };
  std::set<std::string> fail_train;
  int train_calls = 0;

  std::string train(const TrainJob& job) override {
    ++train_calls;
    if (fail_train.count(job.id)) throw std::runtime_error("diverged");
    return "policy:" + job.id;
  }
  std::vector<EpisodeResult> evaluate(const TrainJob& job, const std::string& policy, const EvalJob& e) override {
    EXPECT_EQ(policy, "policy:" + job.id);
    Rng rng(e.seed);
    std::vector<EpisodeResult> out;
    for (int i = 0; i < e.episodes; ++i) {
      EpisodeResult r;
      r.morphology = e.morphology;
      r.success = uniform01(rng) < prob(job.train_set, e.morphology);
      out.push_back(r);
    }
    return out;
  }
};

ProtocolSettings smoke_settings() {
  ProtocolSettings s;
  s.n_seeds = 2;
  s.n_episodes = 10;
  s.experiment_seed = 5;
  s.bootstrap.iterations = 500;
  return s;
}

TEST(Loo, TwoByTwoSmoke) {
  FakeRunner runner;
  const auto m = loo_protocol({"a", "b"}, runner, smoke_settings());
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(runner.train_calls, 4);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const Cell& c = m.at(i, j);
      EXPECT_EQ(c.zero_shot, i == j);
      ASSERT_TRUE(c.complete());
      EXPECT_EQ(c.stats->n_seeds(), 2);
      EXPECT_EQ(c.stats->n_episodes_per_seed(), 10);
      EXPECT_TRUE(c.stats->ci_low.has_value());
      EXPECT_LE(*c.stats->ci_low, c.stats->mean);
      EXPECT_GE(*c.stats->ci_high, c.stats->mean);
    }
  }
  EXPECT_EQ(m.at(0, 0).row, "a");
  EXPECT_EQ(m.at(0, 0).column, "a");
}

TEST(Loo, PlanShapeAndSeeds) {
  auto s = smoke_settings();
  s.n_seeds = 10;
  s.n_episodes = 100;
  const std::vector<std::string> suite{"m1", "m2", "m3", "m4", "m5", "m6", "m7"};
  const JobPlan p = plan_loo(suite, s);
  EXPECT_EQ(p.train.size(), 70u);
  EXPECT_EQ(p.eval.size(), 490u);
  for (const auto& t : p.train) {
    EXPECT_EQ(t.train_set.size(), 6u);
    EXPECT_EQ(std::find(t.train_set.begin(), t.train_set.end(), t.group.substr(8)), t.train_set.end());
  }
  std::set<std::uint64_t> seeds;
  for (const auto& t : p.train) seeds.insert(t.seed);
  EXPECT_EQ(seeds.size(), 70u);
  EXPECT_EQ(plan_loo(suite, s).train[17].seed, p.train[17].seed);
  EXPECT_THROW(plan_loo({"solo"}, s), ArgumentError);
}

TEST(Loo, FailuresAreRecordedPerCell) {
  FakeRunner runner;
  runner.fail_train = {"loo_without_a_s1"};
  const auto m = loo_protocol({"a", "b"}, runner, smoke_settings());
  const Cell& c = m.at(0, 1);
  ASSERT_TRUE(c.stats.has_value());
  EXPECT_EQ(c.stats->n_seeds(), 1);
  EXPECT_FALSE(c.stats->ci_low.has_value());
  ASSERT_EQ(c.errors.size(), 1u);
  EXPECT_NE(c.errors[0].find("diverged"), std::string::npos);
  EXPECT_TRUE(m.at(1, 1).complete());
}

TEST(Loo, SpecialistStars) {
  FakeRunner runner;
  std::map<std::string, SuccessStatistics> spec{{"a", from_rates({0.0, 0.05, 0.1})},
                                                {"b", from_rates({0.0, 0.05, 0.1})}};
  auto s = smoke_settings();
  s.n_episodes = 50;
  s.n_seeds = 4;
  const auto m = loo_protocol({"a", "b"}, runner, s, &spec);
  ASSERT_TRUE(m.at(0, 1).vs_specialist.has_value());
  EXPECT_TRUE(m.at(0, 1).vs_specialist->significant());
}

TEST(Loo, CellsIgnoreEpisodeOrder) {
  auto s = smoke_settings();
  const JobPlan plan = plan_loo({"a", "b"}, s);
  FakeRunner runner;
  PlanOutcome out = execute(plan, runner);
  const auto m1 = loo_from_outcome({"a", "b"}, plan, out, s);
  for (auto& e : out.evaluations) std::reverse(e->begin(), e->end());
  const auto m2 = loo_from_outcome({"a", "b"}, plan, out, s);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(m1.at(i, j).stats->per_seed_rates, m2.at(i, j).stats->per_seed_rates);
      EXPECT_EQ(*m1.at(i, j).stats->ci_low, *m2.at(i, j).stats->ci_low);
    }
  }
}

TEST(Scaling, CurveTagsDiverseSet) {
  FakeRunner runner;
  runner.prob = [](const std::vector<std::string>& set, const std::string&) { return 0.2 * set.size(); };
  const std::vector<ScalingSet> sets{
      {"1", {"a"}, false}, {"2", {"a", "b"}, false}, {"3-diverse", {"a", "c", "d"}, true}};
  auto s = smoke_settings();
  s.n_episodes = 40;
  const auto curve = scaling_protocol(sets, "h", runner, s);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_EQ(curve.points[2].k, 3);
  EXPECT_TRUE(curve.points[2].diverse);
  EXPECT_FALSE(curve.points[0].diverse);
  EXPECT_TRUE(curve.points[0].cell.zero_shot);
  EXPECT_LT(curve.points[0].cell.stats->mean, curve.points[2].cell.stats->mean);
  EXPECT_THROW(plan_scaling({{"bad", {"a", "h"}, false}}, "h", s), ArgumentError);
}

TEST(Scaling, SinglePointCurve) {
  FakeRunner runner;
  const auto curve = scaling_protocol({{"1", {"a"}, false}}, "b", runner, smoke_settings());
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_TRUE(curve.points[0].cell.complete());
}

TEST(Compare, DeltasAndTests) {
  Rng rng(13);
  std::map<std::string, SuccessStatistics> a{{"x", from_rates({0.7, 0.8, 0.9})}};
  const auto same = compare_specialist_shared(a, a, rng);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0].delta, 0.0);
  EXPECT_DOUBLE_EQ(same[0].test.p, 1.0);
  std::map<std::string, SuccessStatistics> shared{{"x", from_rates(std::vector<double>(10, 0.9))}};
  std::map<std::string, SuccessStatistics> spec{{"x", from_rates(std::vector<double>(10, 0.3))}};
  const auto d = compare_specialist_shared(shared, spec, rng);
  EXPECT_NEAR(d[0].delta, 0.6, 1e-12);
  EXPECT_LT(d[0].test.p, 0.001);
  EXPECT_NEAR(d[0].ci.low, 0.6, 1e-12);
  std::map<std::string, SuccessStatistics> other{{"y", from_rates({0.1, 0.2})}};
  EXPECT_THROW(compare_specialist_shared(shared, other, rng), ArgumentError);
}

TEST(Compare, ProtocolRunsSharedAndSpecialists) {
  FakeRunner runner;
  runner.prob = [](const std::vector<std::string>& set, const std::string&) { return set.size() > 1 ? 0.9 : 0.3; };
  auto s = smoke_settings();
  s.n_seeds = 3;
  s.n_episodes = 30;
  const auto r = compare_protocol({"a", "b"}, runner, s);
  EXPECT_EQ(runner.train_calls, 9);
  ASSERT_EQ(r.deltas.size(), 2u);
  EXPECT_EQ(r.deltas[0].morphology, "a");
  EXPECT_GT(r.deltas[0].delta, 0.3);
}

// ---- report

Report full_report() {
  FakeRunner runner;
  Report r;
  r.loo = loo_protocol({"a", "b"}, runner, smoke_settings());
  r.scaling.push_back(scaling_protocol({{"1", {"a"}, false}, {"2", {"a", "c"}, true}}, "b", runner, smoke_settings()));
  r.compare = compare_protocol({"a", "b"}, runner, smoke_settings());
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Report, WritesDeterministicFiles) {
  const auto d1 = testing::scratch_dir("report1"), d2 = testing::scratch_dir("report2");
  const auto f1 = emit_report(full_report(), d1);
  const auto f2 = emit_report(full_report(), d2);
  ASSERT_EQ(f1.size(), f2.size());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    names.push_back(f1[i].filename().string());
    EXPECT_EQ(f1[i].filename(), f2[i].filename());
    EXPECT_EQ(slurp(f1[i]), slurp(f2[i])) << f1[i];
  }
  EXPECT_EQ(names, (std::vector<std::string>{"loo.csv", "loo_heatmap.svg", "scaling_b.csv", "scaling_b.svg",
                                              "compare.csv", "compare_deltas.csv", "compare_deltas.svg",
                                              "summary.md"}));
  EXPECT_NE(slurp(d1 / "summary.md").find("no correction for multiple comparisons"), std::string::npos);
  EXPECT_NE(slurp(d1 / "scaling_b.svg").find("polygon"), std::string::npos);
}

TEST(Report, LooCsvHasOneRowPerCell) {
  FakeRunner runner;
  auto s = smoke_settings();
  s.n_seeds = 2;
  s.n_episodes = 3;
  Report r;
  r.loo = loo_protocol({"m1", "m2", "m3", "m4", "m5", "m6", "m7"}, runner, s);
  const auto dir = testing::scratch_dir("report7");
  emit_report(r, dir);
  const std::string csv = slurp(dir / "loo.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 50);
  EXPECT_TRUE(std::filesystem::exists(dir / "loo_heatmap.svg"));
}

TEST(Report, EmptyWritesNothing) {
  const auto dir = testing::scratch_dir("report_empty") / "never";
  EXPECT_TRUE(emit_report({}, dir).empty());
  EXPECT_FALSE(std::filesystem::exists(dir));
}

TEST(Report, UnwritableDirectory) {
  const auto file = testing::scratch_dir("report_bad") / "plain";
  std::ofstream(file) << "x";
  EXPECT_THROW(emit_report(full_report(), file / "sub"), IoError);
}

}  // namespace
}  // namespace getup
