#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "getup/rand/randomization.hpp"

namespace getup {

inline constexpr int kObsDim = 27;
inline constexpr int kActDim = 5;

using Vec5 = std::array<double, kActDim>;
using ObservationVector = std::array<double, kObsDim>;

// Offsets of each block inside ObservationVector.
namespace obs {
inline constexpr int q = 0;
inline constexpr int q_dot = 5;
inline constexpr int q_des = 10;
inline constexpr int trunk_rpy = 15;
inline constexpr int trunk_rpy_rate = 18;
inline constexpr int h_head = 21;
inline constexpr int prev_action = 22;
}  // namespace obs

// Backend readout. Joint values are per side in canonical sign so that a
// mirror-symmetric motion gives equal left and right entries.
struct SimSnapshot {
  Vec5 q_left{}, q_right{};
  Vec5 q_dot_left{}, q_dot_right{};
  std::array<double, 3> trunk_rpy{};       // rad, as reported by the IMU
  std::array<double, 3> trunk_rpy_rate{};  // rad/s, IMU-frame angular velocity
  double head_height_raw = 0.0;            // m, head above mean foot height
  int self_collision_count = 0;
  double sim_time = 0.0;  // s since the end of reset

  Vec5 q() const;
  Vec5 q_dot() const;
  bool finite() const;
};

struct RewardBreakdown {
  double r_up = 0.0;
  double r_pitch = 0.0;
  double r_vel = 0.0;
  double r_var = 0.0;
  double r_collision = 0.0;
  double total = 0.0;
  bool operator==(const RewardBreakdown&) const = default;
};

enum class TerminationReason { none, timeout, pitch_flip, violent_motion };
std::string_view to_string(TerminationReason r);
TerminationReason parse_termination(std::string_view s);

enum class AngularVelocityUnit { deg_per_s, rad_per_s };
std::string_view to_string(AngularVelocityUnit u);

enum class SuccessMode {
  // h >= threshold from some step through the last one.
  hold_to_end,
  // As above, and the final run lasts at least success_min_hold seconds.
  min_hold,
};
std::string_view to_string(SuccessMode m);

struct EnvConfig {
  double dt = 0.05;               // s per control step
  double episode_length = 10.0;   // s
  int substeps = 10;              // physics steps per control step
  double pitch_flip_limit = 135.0 * std::numbers::pi / 180.0;  // rad
  double angular_velocity_limit = 25.0;
  AngularVelocityUnit angular_velocity_unit = AngularVelocityUnit::deg_per_s;
  double init_displacement = 0.5 * std::numbers::pi;  // rad
  double success_height_threshold = 0.9;              // normalized
  SuccessMode success_mode = SuccessMode::hold_to_end;
  double success_min_hold = 0.0;  // s, min_hold mode only
  double h_floor = -0.2;          // normalized head height when below the feet
  double pitch_gate = 0.4;        // normalized head height opening r_pitch
  double a_max = std::numbers::pi;  // rad/s
  double settle_max_time = 1.0;     // s
  double settle_min_time = 0.25;    // s
  double settle_kinetic_energy = 1e-3;  // J/kg
  int max_reset_attempts = 5;

  double angular_velocity_limit_rad() const {
    return angular_velocity_unit == AngularVelocityUnit::deg_per_s
               ? angular_velocity_limit * std::numbers::pi / 180.0
               : angular_velocity_limit;
  }
  int episode_steps() const { return static_cast<int>(std::lround(episode_length / dt)); }
  // Throws ArgumentError.
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

struct EpisodeResult {
  std::string morphology;
  std::uint64_t seed = 0;
  bool success = false;
  int steps = 0;
  TerminationReason termination = TerminationReason::none;
  double cumulative_reward = 0.0;
  RandomizationSample randomization;
};

}  // namespace getup
