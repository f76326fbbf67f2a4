#pragma once

#include <span>

#include "getup/env/types.hpp"
#include "getup/morph/morphology.hpp"

namespace getup {

using GroupLimits = std::array<JointLimit, kNumGroups>;

GroupLimits group_limits(const MorphologySpec& spec);

// q_des + a * dt, clamped per group.
Vec5 integrate_action(const Vec5& q_des, const Vec5& a, double dt, const GroupLimits& limits);

double head_height_normalized(double head_height_raw, double nominal_head_height, double h_floor = -0.2);
double head_height_normalized(const SimSnapshot& snap, const MorphologySpec& morph, double h_floor = -0.2);

// Throws EnvironmentFault on a non-finite snapshot.
ObservationVector build_observation(const SimSnapshot& snap, const Vec5& q_des, const Vec5& prev_action,
                                    const MorphologySpec& morph, const EnvConfig& cfg = {});

RewardBreakdown compute_reward(const SimSnapshot& snap, const Vec5& a_t, const Vec5& a_prev,
                               const MorphologySpec& morph, const EnvConfig& cfg = {});
// Same formulas from already-derived quantities.
RewardBreakdown compute_reward_terms(double h, double pitch, const Vec5& q_dot, const Vec5& a_t, const Vec5& a_prev,
                                     int self_collisions, double pitch_gate = 0.4);

// `t` is the time since the episode started.
TerminationReason check_termination(const SimSnapshot& snap, double t, const EnvConfig& cfg);

// Over a full episode trace (one snapshot per control step, sim_time
// relative to the episode start).
bool check_success(std::span<const SimSnapshot> trace, const MorphologySpec& morph, const EnvConfig& cfg);

// Same rule over the normalized head heights of an episode that ended with
// `reason`.
bool check_success(std::span<const double> h_trace, TerminationReason reason, const EnvConfig& cfg);

}  // namespace getup
