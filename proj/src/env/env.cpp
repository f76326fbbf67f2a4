#include "getup/env/env.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <thread>

#include "getup/core/error.hpp"

namespace getup {

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open trace file " + path.string());
}

void TraceWriter::reset(const std::string& morphology, std::uint64_t seed, const RandomizationSample& sample,
                        const ObservationVector& obs) {
  nlohmann::json j;
  j["event"] = "reset";
  j["morphology"] = morphology;
  j["seed"] = seed;
  j["randomization"] = {{"mass_scale", sample.mass_scale},
                        {"com_offset_scale", sample.com_offset_scale},
                        {"friction_scale_ground", sample.friction_scale_ground},
                        {"friction_scale_actuator", sample.friction_scale_actuator},
                        {"gain_scale", sample.gain_scale},
                        {"imu_offset_rpy_deg", sample.imu_offset_rpy_deg}};
  j["obs"] = obs;
  out_ << j.dump() << '\n';
}

void TraceWriter::step(int step, const ObservationVector& obs, const Vec5& action, const RewardBreakdown& r,
                       TerminationReason reason) {
  nlohmann::json j;
  j["event"] = "step";
  j["step"] = step;
  j["obs"] = obs;
  j["action"] = action;
  j["reward"] = {{"r_up", r.r_up},   {"r_pitch", r.r_pitch},         {"r_vel", r.r_vel},
                 {"r_var", r.r_var}, {"r_collision", r.r_collision}, {"total", r.total}};
  j["termination"] = std::string(to_string(reason));
  out_ << j.dump() << '\n';
}

GetupEnv::GetupEnv(std::shared_ptr<const MorphologyAsset> asset, const EnvConfig& cfg)
    : GetupEnv(asset->spec, cfg, std::make_unique<MujocoBackend>(asset)) {}

GetupEnv::GetupEnv(MorphologySpec spec, const EnvConfig& cfg, std::unique_ptr<SimBackend> backend)
    : spec_(std::move(spec)), cfg_(cfg), limits_(group_limits(spec_)), backend_(std::move(backend)) {
  cfg_.validate();
  if (!(spec_.nominal_head_height > 0.0)) throw ArgumentError(spec_.id + ": nominal head height must be positive");
}

ObservationVector GetupEnv::reset(std::uint64_t seed, const RandomizationSample& sample) {
  Rng rng(seed);
  bool ok = false;
  for (int attempt = 0; attempt < cfg_.max_reset_attempts && !ok; ++attempt) {
    ok = backend_->reset(rng, sample, cfg_);
  }
  if (!ok) {
    throw EnvironmentFault(spec_.id + ": reset diverged " + std::to_string(cfg_.max_reset_attempts) +
                           " times (seed " + std::to_string(seed) + ", " + sample.to_string() + ")");
  }
  const SimSnapshot snap = backend_->snapshot();
  const Vec5 q = snap.q();
  for (std::size_t i = 0; i < q.size(); ++i) q_des_[i] = std::clamp(q[i], limits_[i].lo, limits_[i].hi);
  prev_action_.fill(0.0);
  backend_->set_targets(q_des_);
  steps_ = 0;
  started_ = true;
  done_ = false;
  h_trace_.clear();
  h_trace_.reserve(static_cast<std::size_t>(cfg_.episode_steps()));
  result_ = EpisodeResult{};
  result_.morphology = spec_.id;
  result_.seed = seed;
  result_.randomization = sample;
  const ObservationVector o = build_observation(snap, q_des_, prev_action_, spec_, cfg_);
  if (trace_) trace_->reset(spec_.id, seed, sample, o);
  return o;
}

StepResult GetupEnv::step(const Vec5& action) {
  if (!started_) throw UsageError("step() before reset()");
  if (done_) throw UsageError("step() after the episode ended; call reset()");
  Vec5 a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(action[i])) throw ArgumentError("non-finite action");
    a[i] = std::clamp(action[i], -cfg_.a_max, cfg_.a_max);
  }
  q_des_ = integrate_action(q_des_, a, cfg_.dt, limits_);
  backend_->set_targets(q_des_);
  if (!backend_->advance(cfg_)) {
    throw EnvironmentFault(spec_.id + ": simulation diverged at step " + std::to_string(steps_ + 1));
  }
  ++steps_;

  StepResult r;
  r.info.snapshot = backend_->snapshot();
  r.info.q_des = q_des_;
  r.info.h_head = head_height_normalized(r.info.snapshot, spec_, cfg_.h_floor);
  r.obs = build_observation(r.info.snapshot, q_des_, a, spec_, cfg_);
  r.reward = compute_reward(r.info.snapshot, a, prev_action_, spec_, cfg_);
  prev_action_ = a;
  r.reason = check_termination(r.info.snapshot, steps_ * cfg_.dt, cfg_);
  h_trace_.push_back(r.info.h_head);
  result_.cumulative_reward += r.reward.total;
  result_.steps = steps_;
  if (r.reason != TerminationReason::none) {
    r.done = done_ = true;
    result_.termination = r.reason;
    result_.success = check_success(std::span<const double>(h_trace_), r.reason, cfg_);
  }
  if (trace_) trace_->step(steps_, r.obs, a, r.reward, r.reason);
  return r;
}

VecEnv::VecEnv(std::vector<std::shared_ptr<const MorphologyAsset>> suite, const EnvConfig& cfg,
               const RandomizationConfig& randomization, std::size_t n, std::uint64_t seed, bool randomize,
               int threads)
    : suite_(std::move(suite)), cfg_(cfg), randomization_(randomization), randomize_(randomize),
      threads_(std::max(1, threads)) {
  if (suite_.empty()) throw ArgumentError("VecEnv needs a nonempty suite");
  if (n == 0) throw ArgumentError("VecEnv needs at least one environment");
  cfg_.validate();
  if (randomize_) randomization_.validate();
  slots_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    slots_[i].rng.seed(derive_seed(seed, i));
    slots_[i].envs.resize(suite_.size());
  }
}

ObservationVector VecEnv::reset_slot(Slot& slot) {
  slot.active = static_cast<std::size_t>(uniform_index(slot.rng, suite_.size()));
  const RandomizationSample sample =
      randomize_ ? sample_randomization(slot.rng, randomization_) : RandomizationSample::identity();
  const std::uint64_t episode_seed = slot.rng();
  auto& env = slot.envs[slot.active];
  if (!env) env = std::make_unique<GetupEnv>(suite_[slot.active], cfg_);
  return env->reset(episode_seed, sample);
}

std::vector<ObservationVector> VecEnv::reset_all() {
  std::vector<ObservationVector> out;
  out.reserve(slots_.size());
  for (Slot& s : slots_) out.push_back(reset_slot(s));
  return out;
}

VecEnv::SlotStep VecEnv::step_slot(Slot& slot, const Vec5& action) {
  SlotStep out;
  out.morphology = slot.active;
  GetupEnv& env = *slot.envs[slot.active];
  out.step = env.step(action);
  if (out.step.done) {
    out.finished = env.result();
    out.reset_obs = reset_slot(slot);
  }
  return out;
}

std::vector<VecEnv::SlotStep> VecEnv::step_all(const std::vector<Vec5>& actions) {
  if (actions.size() != slots_.size()) throw ArgumentError("step_all needs one action per environment");
  std::vector<SlotStep> out(slots_.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), slots_.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < slots_.size(); ++i) out[i] = step_slot(slots_[i], actions[i]);
    return out;
  }
  // Slots share nothing mutable, so each worker takes a strided subset.
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < slots_.size(); i += workers) out[i] = step_slot(slots_[i], actions[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::string> VecEnv::rng_states() const {
  std::vector<std::string> out;
  for (const Slot& s : slots_) out.push_back(rng_state(s.rng));
  return out;
}

void VecEnv::restore_rng_states(const std::vector<std::string>& states) {
  if (states.size() != slots_.size()) throw ArgumentError("rng state count does not match environment count");
  for (std::size_t i = 0; i < states.size(); ++i) restore_rng_state(slots_[i].rng, states[i]);
}

}  // namespace getup
