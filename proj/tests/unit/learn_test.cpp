#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/learn_oracles.hpp"
#include "getup/core/error.hpp"
#include "getup/learn/agent.hpp"
#include "getup/learn/checkpoint.hpp"
#include "getup/learn/replay.hpp"
#include "getup/learn/serialize.hpp"
#include "getup/learn/trainer.hpp"

namespace getup {
namespace {

using namespace getup::testing;

// ---- structure

TEST(Agent, CrossQHasNoTargetsSacHasOneCopyPerCritic) {
  Rng rng(1);
  Agent<float> crossq(small_config(Algorithm::crossq, {32, 32}), std::numbers::pi, rng);
  Agent<float> sac(small_config(Algorithm::sac, {32, 32}), std::numbers::pi, rng);
  EXPECT_EQ(crossq.target_parameter_count(), 0);
  EXPECT_TRUE(crossq.targets.empty());
  EXPECT_EQ(sac.targets.size(), 2u);
  EXPECT_EQ(sac.target_parameter_count(), sac.critic_parameter_count());
  EXPECT_EQ(sac.targets[0].parameter_count(), sac.critics[0].parameter_count());
  // The BRN layers only exist on CrossQ critics.
  EXPECT_GT(crossq.critic_parameter_count(), sac.critic_parameter_count());
  EXPECT_FALSE(crossq.critics[0].norms().empty());
  EXPECT_TRUE(sac.critics[0].norms().empty());
}

TEST(Agent, PolicyInputIsTheObservationOnly) {
  Rng rng(2);
  Agent<float> a(small_config(Algorithm::crossq), std::numbers::pi, rng);
  EXPECT_EQ(a.actor.spec().in, kObsDim);
  EXPECT_EQ(a.critics[0].spec().in, kObsDim + kActDim);
}

TEST(Agent, ActionsAreBounded) {
  Rng rng(3);
  Agent<D> a(small_config(Algorithm::crossq), std::numbers::pi, rng);
  const MatD obs = random_mat(kObsDim, 50, rng, 10.0);
  const MatD noise = random_mat(kActDim, 50, rng, 5.0);
  const auto p = a.policy(obs, &noise);
  EXPECT_LE(p.action.cwiseAbs().maxCoeff(), std::numbers::pi);
  EXPECT_TRUE(p.log_prob.allFinite());
}

// ---- critic targets

TEST(Critic, AllTerminalTargetIsReward) {
  Rng rng(4);
  Agent<D> a(small_config(Algorithm::crossq), std::numbers::pi, rng);
  Batch<D> b = random_batch(5, rng, 1.0);
  const nn::Col<D> y = a.td_target(b, nn::Col<D>::Constant(5, 123.0), nn::Col<D>::Constant(5, -4.0));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(y(i), b.reward(i));
}

TEST(Critic, ZeroDiscountTargetIsReward) {
  Rng rng(5);
  TrainConfig c = small_config(Algorithm::sac);
  c.gamma = 1e-300;  // gamma must lie in (0, 1); effectively zero
  Agent<D> a(c, std::numbers::pi, rng);
  Batch<D> b = random_batch(5, rng, 0.0);
  const nn::Col<D> y = a.td_target(b, nn::Col<D>::Constant(5, 7.0), nn::Col<D>::Constant(5, 2.0));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(y(i), b.reward(i), 1e-12);
}

TEST(Critic, TimeoutTransitionsBootstrap) {
  Rng rng(6);
  Agent<D> a(small_config(Algorithm::crossq), std::numbers::pi, rng);
  Batch<D> b = random_batch(2, rng);
  b.terminal << 0.0, 1.0;
  const nn::Col<D> y = a.td_target(b, nn::Col<D>::Constant(2, 10.0), nn::Col<D>::Zero(2));
  EXPECT_NEAR(y(0), b.reward(0) + 0.99 * 10.0, 1e-12);
  EXPECT_EQ(y(1), b.reward(1));
}

// Linear critics (no hidden layer) and a linear actor give a TD loss that
// can be written out by hand.
TEST(Critic, LinearCriticLossMatchesClosedForm) {
  Rng rng(7);
  TrainConfig c = small_config(Algorithm::sac, {1});
  c.critic_widths = {};
  c.init_temperature = 0.2;
  Agent<D> ag(c, std::numbers::pi, rng);
  // Replace the critic stack by a single linear layer each.
  nn::MlpSpec lin{kObsDim + kActDim, {}, 1, false, {}};
  for (auto& q : ag.critics) q = nn::Mlp<D>(lin, rng);
  ag.targets.assign(ag.critics.begin(), ag.critics.end());
  Batch<D> b = random_batch(2, rng, 0.0);
  b.terminal << 0.0, 1.0;
  const MatD noise = random_mat(kActDim, 2, rng);

  const double loss = linear_critic_loss_oracle(ag, b, noise, 0.2);
  EXPECT_NEAR(ag.critic_loss(b, noise, nn::Mode::train, false), loss, 1e-6);
}

TEST(Critic, GradientMatchesFiniteDifferencesEvalStatistics) {
  Rng rng(8);
  Agent<D> ag(small_config(Algorithm::crossq), std::numbers::pi, rng);
  // Non-trivial running statistics.
  for (int i = 0; i < 5; ++i) ag.critic_loss(random_batch(16, rng), random_mat(kActDim, 16, rng), nn::Mode::train, false);
  EXPECT_LT(critic_fd_error(ag, random_batch(6, rng), random_mat(kActDim, 6, rng), nn::Mode::eval), 1e-4);
}

TEST(Critic, GradientMatchesFiniteDifferencesBatchStatistics) {
  // Inside the warmup the train-mode pass is plain batch norm, whose
  // output does not depend on the running statistics.
  Rng rng(9);
  Agent<D> ag(small_config(Algorithm::crossq), std::numbers::pi, rng);
  EXPECT_LT(critic_fd_error(ag, random_batch(6, rng), random_mat(kActDim, 6, rng), nn::Mode::train), 1e-4);
}

TEST(Critic, SacGradientMatchesFiniteDifferences) {
  Rng rng(10);
  Agent<D> ag(small_config(Algorithm::sac), std::numbers::pi, rng);
  EXPECT_LT(critic_fd_error(ag, random_batch(6, rng), random_mat(kActDim, 6, rng), nn::Mode::train), 1e-4);
}

TEST(Critic, RenormTreatsCorrectionsAsConstants) {
  nn::RenormConfig rc;
  rc.warmup_steps = 0;
  nn::BatchRenorm<D> bn(3, rc);
  Rng rng(11);
  bn.running_mean << 0.3, -0.2, 0.1;
  bn.running_var << 0.5, 2.0, 1.3;
  bn.gamma.value << 1.5, -0.7, 0.9;
  bn.beta.value << 0.1, 0.2, -0.3;
  const MatD x = random_mat(3, 7, rng);
  // r and d from the unperturbed batch, frozen.
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::VectorXd var = (x.colwise() - mu).array().square().rowwise().mean();
  Eigen::VectorXd r(3), d(3);
  for (int i = 0; i < 3; ++i) {
    const double rs = std::sqrt(bn.running_var(i) + rc.eps);
    r(i) = std::clamp(std::sqrt(var(i) + rc.eps) / rs, 1 / rc.r_max, rc.r_max);
    d(i) = std::clamp((mu(i) - bn.running_mean(i)) / rs, -rc.d_max, rc.d_max);
  }
  auto f = [&](const MatD& in) {
    const Eigen::VectorXd m = in.rowwise().mean();
    const Eigen::VectorXd v = (in.colwise() - m).array().square().rowwise().mean();
    MatD y(3, in.cols());
    for (int i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < in.cols(); ++j)
        y(i, j) = bn.gamma.value(i, 0) * ((in(i, j) - m(i)) / std::sqrt(v(i) + rc.eps) * r(i) + d(i)) +
                  bn.beta.value(i, 0);
    return y;
  };
  nn::BatchRenorm<D> probe = bn;
  const MatD y = probe.forward(x, nn::Mode::train);
  EXPECT_LT((y - f(x)).cwiseAbs().maxCoeff(), 1e-12);
  const MatD w = random_mat(3, 7, rng);
  const MatD dx = probe.backward(w, false);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    MatD xp = x, xm = x;
    xp.data()[i] += 1e-6;
    xm.data()[i] -= 1e-6;
    const double fd = ((f(xp).array() - f(xm).array()) * w.array()).sum() / 2e-6;
    EXPECT_NEAR(dx.data()[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

// ---- actor

TEST(Actor, GradientMatchesFiniteDifferences) {
  for (Algorithm algo : {Algorithm::crossq, Algorithm::sac}) {
    Rng rng(12);
    Agent<D> ag(small_config(algo), std::numbers::pi, rng);
    for (int i = 0; i < 3; ++i) ag.critic_loss(random_batch(16, rng), random_mat(kActDim, 16, rng), nn::Mode::train, false);
    const MatD obs = random_mat(kObsDim, 6, rng);
    const MatD noise = random_mat(kActDim, 6, rng);
    ag.actor_loss(obs, noise, true);
    const double err = max_fd_error(ag.actor.params(), [&] { return ag.actor_loss(obs, noise, false); });
    EXPECT_LT(err, 1e-4) << to_string(algo);
  }
}

TEST(Actor, ZeroTemperatureGradientIsPolicyGradientOfMinusQ) {
  Rng rng(13);
  TrainConfig c = small_config(Algorithm::sac);
  Agent<D> ag(c, std::numbers::pi, rng);
  ag.log_alpha.value(0, 0) = -1e3;  // alpha == 0
  const MatD obs = random_mat(kObsDim, 4, rng);
  const MatD noise = random_mat(kActDim, 4, rng);
  ag.actor_loss(obs, noise, true);
  auto neg_q = [&] {
    const auto p = ag.policy(obs, &noise);
    MatD sa(kObsDim + kActDim, 4);
    sa << obs, p.action;
    const MatD q1 = ag.critics[0].forward(sa, nn::Mode::eval);
    const MatD q2 = ag.critics[1].forward(sa, nn::Mode::eval);
    return -q1.cwiseMin(q2).mean();
  };
  EXPECT_LT(max_fd_error(ag.actor.params(), neg_q), 1e-4);
}

TEST(Temperature, DecreasesWhenEntropyIsAboveTarget) {
  Rng rng(14);
  TrainConfig c = small_config(Algorithm::crossq);
  c.target_entropy = -50.0;  // far below the initial policy entropy
  c.policy_delay = 1;
  Agent<float> ag(c, std::numbers::pi, rng);
  Batch<float> b;
  b.obs = nn::Mat<float>::Random(kObsDim, 6);
  b.next_obs = nn::Mat<float>::Random(kObsDim, 6);
  b.act = nn::Mat<float>::Random(kActDim, 6);
  b.reward = nn::Col<float>::Zero(6);
  b.terminal = nn::Col<float>::Zero(6);
  const float before = ag.alpha();
  const auto st = ag.update(b, rng);
  EXPECT_TRUE(st.actor_updated);
  EXPECT_GT(st.entropy, c.target_entropy);
  EXPECT_LT(ag.alpha(), before);
}

TEST(Agent, PolicyDelaySkipsActorUpdates) {
  Rng rng(15);
  Agent<float> ag(small_config(Algorithm::crossq), std::numbers::pi, rng);
  Batch<float> b;
  b.obs = nn::Mat<float>::Random(kObsDim, 6);
  b.next_obs = nn::Mat<float>::Random(kObsDim, 6);
  b.act = nn::Mat<float>::Random(kActDim, 6);
  b.reward = nn::Col<float>::Ones(6);
  b.terminal = nn::Col<float>::Zero(6);
  int actor_updates = 0;
  for (int i = 0; i < 9; ++i) actor_updates += ag.update(b, rng).actor_updated;
  EXPECT_EQ(actor_updates, 3);
}

// ---- replay

TEST(Replay, SamplesOnlyPushedTransitionsUniformly) {
  ReplayBuffer rb(50);
  for (int i = 0; i < 80; ++i) {
    ObservationVector o{};
    o[0] = i;
    rb.push(o, Vec5{double(i), 0, 0, 0, 0}, i, o, i % 2 == 0, i % 3);
  }
  EXPECT_EQ(rb.size(), 50);
  for (std::int64_t k = 0; k < rb.size(); ++k) {
    EXPECT_GE(rb.observation(k)[0], 30);  // the oldest 30 were overwritten
    EXPECT_EQ(rb.action(k)[0], rb.observation(k)[0]);
  }
  Rng rng(16);
  std::vector<int> hits(50, 0);
  const int n = 200000;
  for (auto i : rb.sample_indices(n, rng)) ++hits[static_cast<std::size_t>(i)];
  const double expected = n / 50.0;
  for (int h : hits) EXPECT_NEAR(h, expected, 3 * std::sqrt(expected) * 1.5);
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - expected) * (h - expected) / expected;
  EXPECT_LT(chi2, 85.0);  // chi-square(49) 99.9% quantile
}

TEST(Replay, TerminalFlagSurvivesGather) {
  ReplayBuffer rb(4);
  ObservationVector o{};
  rb.push(o, Vec5{}, 1.0, o, true, 0);
  rb.push(o, Vec5{}, 2.0, o, false, 1);
  const auto b = rb.gather({0, 1, 1}, ObsNormalizer(false));
  EXPECT_EQ(b.terminal(0), 1.0f);
  EXPECT_EQ(b.terminal(1), 0.0f);
  EXPECT_EQ(b.reward(2), 2.0f);
}

// ---- configs and checkpoints

TEST(Config, JsonRoundTripAndStrictness) {
  TrainConfig t;
  t.widths = {64, 32};
  t.algorithm = Algorithm::sac;
  const TrainConfig back = train_config_from_json(to_json(t));
  EXPECT_EQ(back.widths, t.widths);
  EXPECT_EQ(back.algorithm, Algorithm::sac);
  Json bad = to_json(t);
  bad["batch_sise"] = 3;
  EXPECT_THROW(train_config_from_json(bad), ConfigError);
  Json wrong = to_json(t);
  wrong["batch_size"] = "big";
  try {
    train_config_from_json(wrong);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.batch_size"), std::string::npos);
  }
  EnvConfig e;
  e.angular_velocity_unit = AngularVelocityUnit::rad_per_s;
  const EnvConfig eb = env_config_from_json(to_json(e));
  EXPECT_EQ(eb.angular_velocity_unit, AngularVelocityUnit::rad_per_s);
  EXPECT_NEAR(eb.pitch_flip_limit, e.pitch_flip_limit, 1e-12);
}

TEST(Config, Validation) {
  TrainConfig t;
  t.gamma = 1.0;
  EXPECT_THROW(t.validate(), ArgumentError);
  t = {};
  t.batch_size = 10;
  t.replay_capacity = 5;
  EXPECT_THROW(t.validate(), ArgumentError);
  t = {};
  t.widths.clear();
  EXPECT_THROW(t.validate(), ArgumentError);
}

TEST(Checkpoint, ReloadGivesBitIdenticalActions) {
  TrainConfig c = small_config(Algorithm::crossq, {16, 16});
  PolicyCheckpoint ck = initial_checkpoint(c, {"a", "b"}, 3);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    ObservationVector o;
    for (double& x : o) x = standard_normal(rng);
    ck.agent->normalizer.update(o);
  }
  ck.step = 1234;
  const auto path = testing::scratch_dir("learn") / "roundtrip.ckpt";
  save_checkpoint(path, ck);
  const PolicyCheckpoint back = load_checkpoint(path);
  EXPECT_EQ(back.step, 1234);
  EXPECT_EQ(back.morphologies, ck.morphologies);
  ObservationVector o;
  for (double& x : o) x = standard_normal(rng);
  EXPECT_EQ(back.act(o), ck.act(o));
}

TEST(Checkpoint, RejectsForeignFiles) {
  const auto path = testing::scratch_dir("learn") / "junk.ckpt";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
}

// ---- training loop

EnvConfig fast_env() {
  EnvConfig e;
  e.angular_velocity_unit = AngularVelocityUnit::rad_per_s;
  return e;
}

TEST(Train, ZeroStepsReturnsInitialPolicy) {
  TrainConfig c = small_config(Algorithm::crossq);
  c.total_steps = 0;
  TrainOptions o;
  o.env = fast_env();
  const auto r = train(c, {testing::asset("proc_small")}, 5, o);
  EXPECT_TRUE(r.metrics.empty());
  const PolicyCheckpoint init = initial_checkpoint(c, {"proc_small"}, 5, o.env);
  ObservationVector obs{};
  obs[3] = 0.5;
  EXPECT_EQ(r.checkpoint.act(obs), init.act(obs));
}

TEST(Train, ShortRunLogsAndIsDeterministic) {
  TrainConfig c = small_config(Algorithm::crossq, {32, 32});
  c.total_steps = 1200;
  c.warmup_steps = 400;
  c.n_parallel_envs = 4;
  c.batch_size = 32;
  c.replay_capacity = 2000;
  c.log_interval = 400;
  TrainOptions o;
  o.env = fast_env();
  const auto suite = std::vector{testing::asset("proc_small"), testing::asset("proc_large")};
  const auto a = train(c, suite, 9, o);
  const auto b = train(c, suite, 9, o);
  ASSERT_EQ(a.metrics.size(), 6u);  // 3 windows x 2 morphologies
  EXPECT_EQ(a.metrics.back().step, 1200);
  EXPECT_TRUE(std::isfinite(a.metrics.back().critic_loss));
  ObservationVector obs{};
  obs[21] = 0.3;
  EXPECT_EQ(a.checkpoint.act(obs), b.checkpoint.act(obs));
  EXPECT_EQ(a.checkpoint.agent->updates, 800);
}

TEST(Train, ResumeContinuesFromStateCheckpoint) {
  TrainConfig c = small_config(Algorithm::sac, {16});
  c.total_steps = 800;
  c.warmup_steps = 200;
  c.n_parallel_envs = 4;
  c.batch_size = 16;
  c.replay_capacity = 1000;
  c.log_interval = 400;
  c.checkpoint_interval = 400;
  TrainOptions o;
  o.env = fast_env();
  o.out_dir = testing::scratch_dir("learn_resume");
  std::filesystem::remove(*o.out_dir / "metrics.csv");
  const auto suite = std::vector{testing::asset("proc_small")};
  train(c, suite, 4, o);
  EXPECT_TRUE(std::filesystem::exists(*o.out_dir / "policy.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(*o.out_dir / "state.ckpt"));
  TrainConfig longer = c;
  longer.total_steps = 1200;
  TrainOptions r = o;
  r.resume_from = *o.out_dir / "policy.ckpt";
  const auto res = train(longer, suite, 4, r);
  EXPECT_EQ(res.checkpoint.step, 1200);
  EXPECT_EQ(res.metrics.size(), 1u);
}

TEST(Evaluate, UntrainedPolicyRarelySucceedsAndIsReproducible) {
  TrainConfig c = small_config(Algorithm::crossq, {64, 64});
  const PolicyCheckpoint ck = initial_checkpoint(c, {"proc_mid"}, 1, fast_env());
  Rng r1(21), r2(21);
  const auto a = evaluate_policy(ck, testing::asset("proc_mid"), 30, r1);
  const auto b = evaluate_policy(ck, testing::asset("proc_mid"), 30, r2);
  ASSERT_EQ(a.size(), 30u);
  int wins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].success, b[i].success);
    EXPECT_EQ(a[i].cumulative_reward, b[i].cumulative_reward);
    wins += a[i].success;
  }
  EXPECT_LT(wins, 3);
  Rng r3(1);
  EXPECT_THROW(evaluate_policy(ck, testing::asset("proc_mid"), 0, r3), ArgumentError);
}

}  // namespace
}  // namespace getup
