#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "getup/env/env.hpp"
#include "getup/learn/checkpoint.hpp"

namespace getup {

struct MetricsRow {
  std::int64_t step = 0;
  std::string morphology;
  int episodes = 0;  // finished in this window
  double mean_return = 0.0;
  double success_rate = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double temperature = 0.0;
  double entropy = 0.0;
};

// Append-only CSV; the header is written when the file is new.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& path);
  void append(const MetricsRow& row);
  static const char* header();

 private:
  std::filesystem::path path_;
};

struct TrainOptions {
  EnvConfig env;
  RandomizationConfig randomization;
  bool randomize = true;
  // When set: metrics.csv, policy.ckpt and periodic state checkpoints
  // (with replay) are written here.
  std::optional<std::filesystem::path> out_dir;
  // Continue from a checkpoint written by an earlier run of the same
  // configuration.
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const MetricsRow&)> on_log;
};

struct TrainResult {
  PolicyCheckpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

// Throws TrainingDiverged after writing diagnostic.ckpt into out_dir.
TrainResult train(const TrainConfig& config, const std::vector<std::shared_ptr<const MorphologyAsset>>& suite,
                  std::uint64_t seed, const TrainOptions& options = {});

// A checkpoint holding a freshly initialized policy.
PolicyCheckpoint initial_checkpoint(const TrainConfig& config, const std::vector<std::string>& morphologies,
                                    std::uint64_t seed, const EnvConfig& env = {},
                                    const RandomizationConfig& randomization = {});

struct EvalOptions {
  bool randomize = true;
  // Falls back to the checkpoint's ranges when unset.
  std::optional<RandomizationConfig> randomization;
  std::optional<EnvConfig> env;
};

// Deterministic mean actions, one randomization sample and episode seed
// drawn from `rng` per episode.
std::vector<EpisodeResult> evaluate_policy(const PolicyCheckpoint& ckpt,
                                           const std::shared_ptr<const MorphologyAsset>& morph, int n_episodes,
                                           Rng& rng, const EvalOptions& options = {});

}  // namespace getup
