#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <vector>

#include "getup/env/backend.hpp"

namespace getup {

struct StepInfo {
  SimSnapshot snapshot;
  double h_head = 0.0;
  Vec5 q_des{};
};

struct StepResult {
  ObservationVector obs{};
  RewardBreakdown reward;
  bool done = false;
  TerminationReason reason = TerminationReason::none;
  StepInfo info;
};

// Line-delimited JSON episode trace: one "reset" record then one record
// per step.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void reset(const std::string& morphology, std::uint64_t seed, const RandomizationSample& sample,
             const ObservationVector& obs);
  void step(int step, const ObservationVector& obs, const Vec5& action, const RewardBreakdown& reward,
            TerminationReason reason);

 private:
  std::ofstream out_;
};

class GetupEnv {
 public:
  GetupEnv(std::shared_ptr<const MorphologyAsset> asset, const EnvConfig& cfg);
  GetupEnv(MorphologySpec spec, const EnvConfig& cfg, std::unique_ptr<SimBackend> backend);

  // Retries divergent settling with fresh draws up to max_reset_attempts,
  // then throws EnvironmentFault.
  ObservationVector reset(std::uint64_t seed, const RandomizationSample& sample = RandomizationSample::identity());
  // Throws UsageError when called before reset or after the episode ended.
  StepResult step(const Vec5& action);

  bool done() const { return done_; }
  int steps() const { return steps_; }
  // Valid once done().
  const EpisodeResult& result() const { return result_; }
  const MorphologySpec& morphology() const { return spec_; }
  const EnvConfig& config() const { return cfg_; }
  SimBackend& backend() { return *backend_; }
  void set_trace(TraceWriter* trace) { trace_ = trace; }

 private:
  MorphologySpec spec_;
  EnvConfig cfg_;
  GroupLimits limits_;
  std::unique_ptr<SimBackend> backend_;
  bool started_ = false;
  bool done_ = false;
  int steps_ = 0;
  Vec5 q_des_{};
  Vec5 prev_action_{};
  std::vector<double> h_trace_;
  EpisodeResult result_;
  TraceWriter* trace_ = nullptr;
};

// N independent environments stepped together. Every reset draws the
// morphology uniformly from the suite, a randomization sample and an
// episode seed from the slot's own stream.
class VecEnv {
 public:
  struct SlotStep {
    StepResult step;                          // obs is the post-step observation
    std::optional<EpisodeResult> finished;    // set when the episode ended
    std::optional<ObservationVector> reset_obs;  // first obs of the next episode
    std::size_t morphology = 0;               // suite index that produced `step`
  };

  VecEnv(std::vector<std::shared_ptr<const MorphologyAsset>> suite, const EnvConfig& cfg,
         const RandomizationConfig& randomization, std::size_t n, std::uint64_t seed, bool randomize = true,
         int threads = 1);

  std::vector<ObservationVector> reset_all();
  // Finished slots are reset automatically.
  std::vector<SlotStep> step_all(const std::vector<Vec5>& actions);

  std::size_t size() const { return slots_.size(); }
  const std::vector<std::shared_ptr<const MorphologyAsset>>& suite() const { return suite_; }
  std::size_t active_morphology(std::size_t slot) const { return slots_[slot].active; }
  // Stream states, for checkpointing.
  std::vector<std::string> rng_states() const;
  void restore_rng_states(const std::vector<std::string>& states);

 private:
  struct Slot {
    Rng rng;
    std::vector<std::unique_ptr<GetupEnv>> envs;  // one per suite entry, built lazily
    std::size_t active = 0;
  };
  ObservationVector reset_slot(Slot& slot);
  SlotStep step_slot(Slot& slot, const Vec5& action);

  std::vector<std::shared_ptr<const MorphologyAsset>> suite_;
  EnvConfig cfg_;
  RandomizationConfig randomization_;
  bool randomize_;
  int threads_;
  std::vector<Slot> slots_;
};

}  // namespace getup
