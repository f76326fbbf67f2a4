#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "getup/core/random.hpp"
#include "getup/core/rotation.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

struct RandomizationSample {
  double mass_scale = 1.0;
  double com_offset_scale = 1.0;
  double friction_scale_ground = 1.0;
  double friction_scale_actuator = 1.0;
  double gain_scale = 1.0;  // battery voltage proxy
  std::array<double, 3> imu_offset_rpy_deg{0.0, 0.0, 0.0};

  static RandomizationSample identity() { return {}; }
  bool operator==(const RandomizationSample&) const = default;
  std::string to_string() const;
};

struct Range {
  double lo = 1.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  bool operator==(const Range&) const = default;
};

// Per-episode perturbation ranges. Defaults are the published ones:
// mass and CoM +-10%, ground and actuator friction +-15%, motor gains +-10%,
// IMU mounting +-3 deg per axis.
struct RandomizationConfig {
  Range mass{0.9, 1.1};
  Range com_offset{0.9, 1.1};
  Range friction_ground{0.85, 1.15};
  Range friction_actuator{0.85, 1.15};
  Range gain{0.9, 1.1};
  Range imu_offset_deg{-3.0, 3.0};
  // Ranges wider than the defaults are rejected unless this is set.
  bool allow_widened = false;

  static RandomizationConfig disabled();
  // Throws ArgumentError on inverted, non-positive or (unless allowed)
  // widened ranges.
  void validate() const;
  // Whether `s` lies inside these ranges.
  bool contains(const RandomizationSample& s) const;
  bool operator==(const RandomizationConfig&) const = default;
};

class RandomizationFault : public std::runtime_error {
 public:
  RandomizationFault(const std::string& what, RandomizationSample sample)
      : std::runtime_error(what + " [" + sample.to_string() + "]"), sample_(sample) {}
  const RandomizationSample& sample() const { return sample_; }

 private:
  RandomizationSample sample_;
};

// Independent uniform draws, one per field, in declaration order.
RandomizationSample sample_randomization(Rng& rng, const RandomizationConfig& config);

// A compiled model plus the sensor-side perturbation that is not part of
// the physics.
struct SimModel {
  ModelPtr model;
  Mat3 imu_offset = Mat3::Identity();
  RandomizationSample sample;
};

// Copy of `base` with masses/inertias, body CoMs, contact and joint
// friction and servo gains perturbed; `base` is untouched.
SimModel apply_randomization(const mjModel* base, const RandomizationSample& sample);

}  // namespace getup
