#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "getup/env/types.hpp"
#include "getup/learn/agent.hpp"
#include "getup/learn/replay.hpp"
#include "getup/rand/randomization.hpp"

namespace getup {

using PolicyAgent = Agent<float>;

struct PolicyCheckpoint {
  static constexpr std::uint64_t kVersion = 1;

  TrainConfig train;
  EnvConfig env;
  RandomizationConfig randomization;
  bool randomize = true;
  std::vector<std::string> morphologies;  // training set
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::string rng_state;                   // learner stream
  std::vector<std::string> env_rng_states;  // one per parallel environment
  std::shared_ptr<PolicyAgent> agent;

  // Mean action of the squashed Gaussian on a raw observation.
  Vec5 act(const ObservationVector& obs) const;
};

// Written to a temporary file and renamed into place. The replay buffer is
// included only when given.
void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt,
                     const ReplayBuffer* replay = nullptr);
// Throws std::runtime_error on a bad magic, version or truncated file. The
// replay section, if present, is loaded into `replay` when non-null.
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path, std::unique_ptr<ReplayBuffer>* replay = nullptr);

}  // namespace getup
