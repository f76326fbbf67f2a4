#include "getup/learn/config.hpp"

#include <string>

#include "getup/core/error.hpp"

namespace getup {

std::string_view to_string(Algorithm a) { return a == Algorithm::sac ? "sac" : "crossq"; }

Algorithm parse_algorithm(std::string_view s) {
  if (s == "sac") return Algorithm::sac;
  if (s == "crossq") return Algorithm::crossq;
  throw ArgumentError("unknown algorithm '" + std::string(s) + "' (expected sac or crossq)");
}

void TrainConfig::validate() const {
  if (widths.empty()) throw ArgumentError("widths must be nonempty");
  for (int w : widths) {
    if (w < 1) throw ArgumentError("widths must be positive");
  }
  for (int w : critic_widths) {
    if (w < 1) throw ArgumentError("critic_widths must be positive");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("gamma must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (replay_capacity < batch_size) throw ArgumentError("batch_size must not exceed replay_capacity");
  if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("tau must lie in (0, 1]");
  if (n_parallel_envs < 1) throw ArgumentError("n_parallel_envs must be positive");
  if (total_steps < 0) throw ArgumentError("total_steps must be >= 0");
  if (warmup_steps < 0) throw ArgumentError("warmup_steps must be >= 0");
  if (!(utd_ratio > 0.0)) throw ArgumentError("utd_ratio must be positive");
  if (!(init_temperature > 0.0)) throw ArgumentError("init_temperature must be positive");
  if (effective_policy_delay() < 1) throw ArgumentError("policy_delay must be >= 1");
  const double b1 = effective_beta1();
  if (!(b1 >= 0.0 && b1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("adam betas must lie in [0, 1)");
  }
  if (!(renorm.momentum >= 0.0 && renorm.momentum < 1.0)) throw ArgumentError("renorm.momentum must lie in [0, 1)");
  if (!(renorm.r_max >= 1.0) || !(renorm.d_max >= 0.0)) throw ArgumentError("renorm r_max >= 1 and d_max >= 0");
  if (log_interval < 1) throw ArgumentError("log_interval must be positive");
  if (checkpoint_interval < 0) throw ArgumentError("checkpoint_interval must be >= 0");
  if (env_threads < 1) throw ArgumentError("env_threads must be >= 1");
}

}  // namespace getup
