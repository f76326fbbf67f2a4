#pragma once

#include <memory>

#include "getup/core/random.hpp"
#include "getup/env/logic.hpp"
#include "getup/morph/mujoco_model.hpp"
#include "getup/rand/randomization.hpp"

namespace getup {

// What the environment needs from a physics engine.
class SimBackend {
 public:
  virtual ~SimBackend() = default;
  // Applies the randomization, drops the robot into a displaced lying pose
  // drawn from `rng` and settles it. Returns false when the state
  // diverged; the caller retries with the same rng (a fresh draw).
  virtual bool reset(Rng& rng, const RandomizationSample& sample, const EnvConfig& cfg) = 0;
  // Mirror-symmetric canonical targets for the five pitch groups.
  virtual void set_targets(const Vec5& q_des) = 0;
  // Advances one control step. Returns false on a non-finite state.
  virtual bool advance(const EnvConfig& cfg) = 0;
  // sim_time is measured from the end of the last reset.
  virtual SimSnapshot snapshot() const = 0;
};

// A morphology compiled once and shared read-only by every environment.
struct MorphologyAsset {
  MorphologySpec spec;
  ModelPtr model;
  RobotBinding binding;
  double total_mass = 0.0;
};

std::shared_ptr<const MorphologyAsset> load_asset(const MorphologySpec& spec);

class MujocoBackend : public SimBackend {
 public:
  explicit MujocoBackend(std::shared_ptr<const MorphologyAsset> asset);

  bool reset(Rng& rng, const RandomizationSample& sample, const EnvConfig& cfg) override;
  void set_targets(const Vec5& q_des) override;
  bool advance(const EnvConfig& cfg) override;
  SimSnapshot snapshot() const override;

  // Direct access for tests and tools.
  const mjModel* model() const { return sim_.model.get(); }
  mjData* data() { return data_.get(); }
  const RobotBinding& binding() const { return asset_->binding; }
  // Puts the (randomized) robot upright in its initial pose at rest.
  void reset_standing(const RandomizationSample& sample, const EnvConfig& cfg);
  double kinetic_energy_per_kg() const;
  int self_collisions() const;

 private:
  void prepare(const RandomizationSample& sample, const EnvConfig& cfg);
  bool state_finite() const;

  std::shared_ptr<const MorphologyAsset> asset_;
  SimModel sim_;
  bool have_sample_ = false;
  DataPtr data_;
  double t0_ = 0.0;
};

}  // namespace getup
