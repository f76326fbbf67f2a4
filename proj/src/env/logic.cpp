#include "getup/env/logic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "getup/core/error.hpp"
#include "getup/core/rotation.hpp"

namespace getup {

namespace {

constexpr double kTimeEps = 1e-9;

double norm(const Vec5& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Vec5 SimSnapshot::q() const {
  Vec5 out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (q_left[i] + q_right[i]);
  return out;
}

Vec5 SimSnapshot::q_dot() const {
  Vec5 out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (q_dot_left[i] + q_dot_right[i]);
  return out;
}

bool SimSnapshot::finite() const {
  auto ok = [](const auto& xs) { return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); }); };
  return ok(q_left) && ok(q_right) && ok(q_dot_left) && ok(q_dot_right) && ok(trunk_rpy) && ok(trunk_rpy_rate) &&
         std::isfinite(head_height_raw) && std::isfinite(sim_time) && self_collision_count >= 0;
}

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::timeout: return "timeout";
    case TerminationReason::pitch_flip: return "pitch_flip";
    case TerminationReason::violent_motion: return "violent_motion";
  }
  return "none";
}

TerminationReason parse_termination(std::string_view s) {
  for (auto r : {TerminationReason::none, TerminationReason::timeout, TerminationReason::pitch_flip,
                 TerminationReason::violent_motion}) {
    if (to_string(r) == s) return r;
  }
  throw ArgumentError("unknown termination reason '" + std::string(s) + "'");
}

std::string_view to_string(AngularVelocityUnit u) {
  return u == AngularVelocityUnit::deg_per_s ? "deg/s" : "rad/s";
}

std::string_view to_string(SuccessMode m) { return m == SuccessMode::hold_to_end ? "hold_to_end" : "min_hold"; }

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw ArgumentError("env.dt must be positive");
  if (!(episode_length > 0.0)) throw ArgumentError("env.episode_length must be positive");
  const double ratio = episode_length / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ArgumentError("env.episode_length must be an integer multiple of env.dt");
  }
  if (substeps < 1) throw ArgumentError("env.substeps must be >= 1");
  if (!(pitch_flip_limit > 0.0)) throw ArgumentError("env.pitch_flip_limit must be positive");
  if (!(angular_velocity_limit > 0.0)) throw ArgumentError("env.angular_velocity_limit must be positive");
  if (!(init_displacement >= 0.0)) throw ArgumentError("env.init_displacement must be >= 0");
  if (!(a_max > 0.0)) throw ArgumentError("env.a_max must be positive");
  if (!(settle_max_time >= 0.0) || !(settle_min_time >= 0.0)) throw ArgumentError("env settle times must be >= 0");
  if (!(success_min_hold >= 0.0)) throw ArgumentError("env.success_min_hold must be >= 0");
  if (max_reset_attempts < 1) throw ArgumentError("env.max_reset_attempts must be >= 1");
}

GroupLimits group_limits(const MorphologySpec& spec) {
  GroupLimits out;
  for (JointGroup g : kAllGroups) out[static_cast<std::size_t>(g)] = spec.group_limit(g);
  return out;
}

Vec5 integrate_action(const Vec5& q_des, const Vec5& a, double dt, const GroupLimits& limits) {
  Vec5 out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(q_des[i] + a[i] * dt, limits[i].lo, limits[i].hi);
  }
  return out;
}

double head_height_normalized(double raw, double nominal, double h_floor) {
  if (raw < 0.0) return h_floor;
  return raw / nominal;
}

double head_height_normalized(const SimSnapshot& snap, const MorphologySpec& morph, double h_floor) {
  return head_height_normalized(snap.head_height_raw, morph.nominal_head_height, h_floor);
}

ObservationVector build_observation(const SimSnapshot& snap, const Vec5& q_des, const Vec5& prev_action,
                                    const MorphologySpec& morph, const EnvConfig& cfg) {
  if (!snap.finite()) throw EnvironmentFault(morph.id + ": non-finite simulator snapshot");
  ObservationVector o{};
  const Vec5 q = snap.q();
  const Vec5 qd = snap.q_dot();
  for (int i = 0; i < kActDim; ++i) {
    o[obs::q + i] = q[i];
    o[obs::q_dot + i] = qd[i];
    o[obs::q_des + i] = q_des[i];
    o[obs::prev_action + i] = prev_action[i];
  }
  for (int i = 0; i < 3; ++i) {
    o[obs::trunk_rpy + i] = wrap_angle(snap.trunk_rpy[i]);
    o[obs::trunk_rpy_rate + i] = snap.trunk_rpy_rate[i];
  }
  // Clip tall-model overshoot so the value stays in its documented range.
  o[obs::h_head] = std::min(head_height_normalized(snap, morph, cfg.h_floor), 1.5);
  return o;
}

RewardBreakdown compute_reward_terms(double h, double pitch, const Vec5& q_dot, const Vec5& a_t, const Vec5& a_prev,
                                     int self_collisions, double pitch_gate) {
  RewardBreakdown r;
  r.r_up = std::exp(-10.0 * (h - 1.0) * (h - 1.0));
  r.r_pitch = h > pitch_gate ? std::exp(-10.0 * pitch * pitch) : 0.0;
  r.r_vel = 0.1 * std::exp(-norm(q_dot));
  Vec5 da;
  for (std::size_t i = 0; i < da.size(); ++i) da[i] = a_t[i] - a_prev[i];
  r.r_var = 0.05 * std::exp(-norm(da));
  r.r_collision = 0.1 * std::exp(-static_cast<double>(self_collisions));
  r.total = r.r_up + r.r_pitch + r.r_vel + r.r_var + r.r_collision;
  return r;
}

RewardBreakdown compute_reward(const SimSnapshot& snap, const Vec5& a_t, const Vec5& a_prev,
                               const MorphologySpec& morph, const EnvConfig& cfg) {
  const double h = head_height_normalized(snap, morph, cfg.h_floor);
  return compute_reward_terms(h, wrap_angle(snap.trunk_rpy[1]), snap.q_dot(), a_t, a_prev, snap.self_collision_count,
                              cfg.pitch_gate);
}

TerminationReason check_termination(const SimSnapshot& snap, double t, const EnvConfig& cfg) {
  if (std::abs(wrap_angle(snap.trunk_rpy[1])) > cfg.pitch_flip_limit) return TerminationReason::pitch_flip;
  const double limit = cfg.angular_velocity_limit_rad();
  for (double w : snap.trunk_rpy_rate) {
    if (std::abs(w) > limit) return TerminationReason::violent_motion;
  }
  if (t + kTimeEps >= cfg.episode_length) return TerminationReason::timeout;
  return TerminationReason::none;
}

bool check_success(std::span<const double> h_trace, TerminationReason reason, const EnvConfig& cfg) {
  if (reason != TerminationReason::timeout || h_trace.empty()) return false;
  std::size_t run = 0;
  for (auto it = h_trace.rbegin(); it != h_trace.rend() && *it >= cfg.success_height_threshold; ++it) ++run;
  if (run == 0) return false;
  if (cfg.success_mode == SuccessMode::min_hold) {
    return static_cast<double>(run) * cfg.dt + kTimeEps >= cfg.success_min_hold;
  }
  return true;
}

bool check_success(std::span<const SimSnapshot> trace, const MorphologySpec& morph, const EnvConfig& cfg) {
  std::vector<double> h;
  h.reserve(trace.size());
  TerminationReason reason = TerminationReason::none;
  for (const SimSnapshot& s : trace) {
    h.push_back(head_height_normalized(s, morph, cfg.h_floor));
    reason = check_termination(s, s.sim_time, cfg);
    if (reason != TerminationReason::none) break;
  }
  if (h.size() != trace.size()) return false;  // ended before the trace did
  return check_success(std::span<const double>(h), reason, cfg);
}

}  // namespace getup
