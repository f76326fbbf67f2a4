#include "getup/learn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "getup/core/error.hpp"

namespace getup {

MetricsLog::MetricsLog(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!std::filesystem::exists(path) || std::filesystem::file_size(path) == 0) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write metrics log " + path.string());
    os << header() << '\n';
  }
}

const char* MetricsLog::header() {
  return "step,morphology,episodes,mean_return,success_rate,critic_loss,actor_loss,temperature,entropy";
}

void MetricsLog::append(const MetricsRow& r) {
  std::ofstream os(path_, std::ios::app);
  os << std::setprecision(8) << r.step << ',' << r.morphology << ',' << r.episodes << ',' << r.mean_return << ','
     << r.success_rate << ',' << r.critic_loss << ',' << r.actor_loss << ',' << r.temperature << ',' << r.entropy
     << '\n';
}

PolicyCheckpoint initial_checkpoint(const TrainConfig& config, const std::vector<std::string>& morphologies,
                                    std::uint64_t seed, const EnvConfig& env,
                                    const RandomizationConfig& randomization) {
  config.validate();
  Rng rng(derive_seed(seed, 0));
  PolicyCheckpoint c;
  c.train = config;
  c.env = env;
  c.randomization = randomization;
  c.morphologies = morphologies;
  c.seed = seed;
  c.agent = std::make_shared<PolicyAgent>(config, env.a_max, rng);
  c.rng_state = rng_state(rng);
  return c;
}

namespace {

struct Window {
  std::vector<int> episodes, successes;
  std::vector<double> returns;
  double critic = 0.0, actor = 0.0, entropy = 0.0;
  int critic_n = 0, actor_n = 0;
  explicit Window(std::size_t n) : episodes(n, 0), successes(n, 0), returns(n, 0.0) {}
};

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<std::shared_ptr<const MorphologyAsset>>& suite,
                  std::uint64_t seed, const TrainOptions& opt) {
  config.validate();
  opt.env.validate();
  if (suite.empty()) throw ArgumentError("training suite is empty");

  std::vector<std::string> ids;
  for (const auto& a : suite) ids.push_back(a->spec.id);

  TrainResult out;
  PolicyCheckpoint& ck = out.checkpoint;
  ck = initial_checkpoint(config, ids, seed, opt.env, opt.randomization);
  ck.randomize = opt.randomize;
  Rng rng;
  restore_rng_state(rng, ck.rng_state);

  const int n_envs = config.n_parallel_envs;
  VecEnv venv(suite, opt.env, opt.randomization, static_cast<std::size_t>(n_envs), derive_seed(seed, 1),
              opt.randomize, config.env_threads);
  std::unique_ptr<ReplayBuffer> replay;
  if (opt.resume_from) {
    PolicyCheckpoint prev = load_checkpoint(*opt.resume_from, &replay);
    if (prev.morphologies != ids) throw ArgumentError("resume checkpoint was trained on a different suite");
    ck.agent = prev.agent;
    ck.step = prev.step;
    restore_rng_state(rng, prev.rng_state);
    if (!prev.env_rng_states.empty()) venv.restore_rng_states(prev.env_rng_states);
  }
  PolicyAgent& ag = *ck.agent;
  if (!replay) {
    replay = std::make_unique<ReplayBuffer>(std::max<std::int64_t>(
        config.batch_size, std::min(config.replay_capacity, config.total_steps + n_envs)));
  }

  std::optional<MetricsLog> log;
  if (opt.out_dir) log.emplace(*opt.out_dir / "metrics.csv");

  auto snapshot_state = [&] {
    ck.rng_state = rng_state(rng);
    ck.env_rng_states = venv.rng_states();
  };
  auto write_diagnostic = [&] {
    if (!opt.out_dir) return;
    snapshot_state();
    save_checkpoint(*opt.out_dir / "diagnostic.ckpt", ck);
  };

  if (ck.step >= config.total_steps) {
    snapshot_state();
    if (opt.out_dir) save_checkpoint(*opt.out_dir / "policy.ckpt", ck);
    return out;
  }

  std::vector<ObservationVector> obs = venv.reset_all();
  for (const auto& o : obs) ag.normalizer.update(o);
  std::vector<Vec5> actions(static_cast<std::size_t>(n_envs));
  Window win(suite.size());
  double update_credit = 0.0;
  const double a_max = opt.env.a_max;
  nn::Mat<float> xb(kObsDim, n_envs);

  try {
    while (ck.step < config.total_steps) {
      if (ck.step < config.warmup_steps) {
        for (auto& a : actions) {
          for (double& x : a) x = uniform(rng, -a_max, a_max);
        }
      } else {
        for (int i = 0; i < n_envs; ++i) ag.normalizer.apply(obs[static_cast<std::size_t>(i)].data(), xb.col(i).data());
        const nn::Mat<float> noise = ag.sample_noise(n_envs, rng);
        const auto p = ag.policy(xb, &noise);
        for (int i = 0; i < n_envs; ++i) {
          for (int k = 0; k < kActDim; ++k) actions[static_cast<std::size_t>(i)][k] = p.action(k, i);
        }
      }

      const auto steps = venv.step_all(actions);
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        const bool terminal = s.step.done && s.step.reason != TerminationReason::timeout;
        replay->push(obs[i], actions[i], s.step.reward.total, s.step.obs, terminal, static_cast<int>(s.morphology));
        if (s.finished) {
          win.episodes[s.morphology] += 1;
          win.successes[s.morphology] += s.finished->success ? 1 : 0;
          win.returns[s.morphology] += s.finished->cumulative_reward;
          obs[i] = *s.reset_obs;
        } else {
          obs[i] = s.step.obs;
        }
        ag.normalizer.update(obs[i]);
      }
      const std::int64_t before = ck.step;
      ck.step += n_envs;

      if (before >= config.warmup_steps && replay->size() >= config.batch_size) {
        update_credit += n_envs * config.utd_ratio;
        while (update_credit >= 1.0) {
          const Batch<float> batch = replay->sample(config.batch_size, rng, ag.normalizer);
          const UpdateStats st = ag.update(batch, rng);
          win.critic += st.critic_loss;
          ++win.critic_n;
          if (st.actor_updated) {
            win.actor += st.actor_loss;
            win.entropy += st.entropy;
            ++win.actor_n;
          }
          update_credit -= 1.0;
        }
      }

      if (ck.step / config.log_interval != before / config.log_interval || ck.step >= config.total_steps) {
        for (std::size_t m = 0; m < suite.size(); ++m) {
          MetricsRow row;
          row.step = ck.step;
          row.morphology = ids[m];
          row.episodes = win.episodes[m];
          row.mean_return = win.episodes[m] ? win.returns[m] / win.episodes[m] : std::nan("");
          row.success_rate = win.episodes[m] ? static_cast<double>(win.successes[m]) / win.episodes[m] : std::nan("");
          row.critic_loss = win.critic_n ? win.critic / win.critic_n : std::nan("");
          row.actor_loss = win.actor_n ? win.actor / win.actor_n : std::nan("");
          row.entropy = win.actor_n ? win.entropy / win.actor_n : std::nan("");
          row.temperature = static_cast<double>(ag.alpha());
          out.metrics.push_back(row);
          if (log) log->append(row);
          if (opt.on_log) opt.on_log(row);
        }
        win = Window(suite.size());
      }
      if (opt.out_dir && config.checkpoint_interval > 0 &&
          ck.step / config.checkpoint_interval != before / config.checkpoint_interval) {
        snapshot_state();
        save_checkpoint(*opt.out_dir / "state.ckpt", ck, replay.get());
      }
    }
  } catch (const TrainingDiverged& e) {
    write_diagnostic();
    throw TrainingDiverged(std::string(e.what()) + " at step " + std::to_string(ck.step));
  }

  snapshot_state();
  if (opt.out_dir) save_checkpoint(*opt.out_dir / "policy.ckpt", ck);
  return out;
}

std::vector<EpisodeResult> evaluate_policy(const PolicyCheckpoint& ckpt,
                                           const std::shared_ptr<const MorphologyAsset>& morph, int n_episodes,
                                           Rng& rng, const EvalOptions& options) {
  if (n_episodes < 1) throw ArgumentError("n_episodes must be >= 1");
  if (!ckpt.agent) throw ArgumentError("checkpoint has no policy");
  const RandomizationConfig rcfg = options.randomization.value_or(ckpt.randomization);
  GetupEnv env(morph, options.env.value_or(ckpt.env));
  std::vector<EpisodeResult> results;
  results.reserve(static_cast<std::size_t>(n_episodes));
  for (int e = 0; e < n_episodes; ++e) {
    const RandomizationSample sample =
        options.randomize ? sample_randomization(rng, rcfg) : RandomizationSample::identity();
    const std::uint64_t episode_seed = rng();
    ObservationVector o = env.reset(episode_seed, sample);
    while (!env.done()) o = env.step(ckpt.act(o)).obs;
    results.push_back(env.result());
  }
  return results;
}

}  // namespace getup
