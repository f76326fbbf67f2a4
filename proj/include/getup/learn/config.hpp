#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "getup/learn/nn.hpp"

namespace getup {

enum class Algorithm { sac, crossq };
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

struct TrainConfig {
  Algorithm algorithm = Algorithm::crossq;
  std::vector<int> widths{512, 512, 256};
  std::vector<int> critic_widths;  // empty: same as widths
  double learning_rate = 1e-3;
  int batch_size = 1024;
  double gamma = 0.99;
  double tau = 0.01;  // target critics, SAC only
  int n_parallel_envs = 16;
  std::int64_t total_steps = 600000;
  std::int64_t replay_capacity = 1000000;
  double target_entropy = -5.0;
  double init_temperature = 1.0;
  std::int64_t warmup_steps = 5000;  // uniform random actions before learning
  double utd_ratio = 1.0;            // gradient updates per environment step
  std::optional<int> policy_delay;   // default 3 for crossq, 1 for sac
  std::optional<double> adam_beta1;  // default 0.5 for crossq, 0.9 for sac
  double adam_beta2 = 0.999;
  nn::RenormConfig renorm;
  bool normalize_observations = true;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::int64_t log_interval = 5000;
  std::int64_t checkpoint_interval = 0;  // 0: only at the end
  int env_threads = 1;

  int effective_policy_delay() const { return policy_delay.value_or(algorithm == Algorithm::crossq ? 3 : 1); }
  double effective_beta1() const { return adam_beta1.value_or(algorithm == Algorithm::crossq ? 0.5 : 0.9); }
  const std::vector<int>& effective_critic_widths() const { return critic_widths.empty() ? widths : critic_widths; }
  // Throws ArgumentError.
  void validate() const;
};

}  // namespace getup
