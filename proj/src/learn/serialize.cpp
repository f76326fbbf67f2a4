#include "getup/learn/serialize.hpp"

#include <numbers>
#include <set>

#include "getup/core/error.hpp"

namespace getup {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a mapping");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ConfigError("");
        if constexpr (std::is_integral_v<T>) {
          if (!it->is_number_integer() && !(it->is_number_float() && it->template get<double>() ==
                                                                           std::floor(it->template get<double>()))) {
            throw ConfigError("");
          }
        }
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(field(key) + ": invalid value " + it->dump());
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  std::optional<std::string> string(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ConfigError(field(key) + ": expected a string");
    return it->template get<std::string>();
  }

  const Json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where_ + "." + it.key() + ": unknown key");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json range_json(Range r) { return Json::array({r.lo, r.hi}); }

Range range_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Json to_json(const EnvConfig& c) {
  Json j;
  j["dt"] = c.dt;
  j["episode_length"] = c.episode_length;
  j["substeps"] = c.substeps;
  j["pitch_flip_limit_deg"] = c.pitch_flip_limit / kDeg;
  j["angular_velocity_limit"] = c.angular_velocity_limit;
  j["angular_velocity_unit"] = std::string(to_string(c.angular_velocity_unit));
  j["init_displacement_deg"] = c.init_displacement / kDeg;
  j["success_height_threshold"] = c.success_height_threshold;
  j["success_mode"] = std::string(to_string(c.success_mode));
  j["success_min_hold"] = c.success_min_hold;
  j["h_floor"] = c.h_floor;
  j["pitch_gate"] = c.pitch_gate;
  j["a_max"] = c.a_max;
  j["settle_max_time"] = c.settle_max_time;
  j["settle_min_time"] = c.settle_min_time;
  j["settle_kinetic_energy"] = c.settle_kinetic_energy;
  j["max_reset_attempts"] = c.max_reset_attempts;
  return j;
}

EnvConfig env_config_from_json(const Json& j, const std::string& where) {
  EnvConfig c;
  Reader r(j, where);
  r.get("dt", c.dt);
  r.get("episode_length", c.episode_length);
  r.get("substeps", c.substeps);
  std::optional<double> deg;
  r.get("pitch_flip_limit_deg", deg);
  if (deg) c.pitch_flip_limit = *deg * kDeg;
  r.get("angular_velocity_limit", c.angular_velocity_limit);
  if (auto u = r.string("angular_velocity_unit")) {
    if (*u == "deg/s") c.angular_velocity_unit = AngularVelocityUnit::deg_per_s;
    else if (*u == "rad/s") c.angular_velocity_unit = AngularVelocityUnit::rad_per_s;
    else throw ConfigError(r.field("angular_velocity_unit") + ": expected 'deg/s' or 'rad/s'");
  }
  deg.reset();
  r.get("init_displacement_deg", deg);
  if (deg) c.init_displacement = *deg * kDeg;
  r.get("success_height_threshold", c.success_height_threshold);
  if (auto m = r.string("success_mode")) {
    if (*m == "hold_to_end") c.success_mode = SuccessMode::hold_to_end;
    else if (*m == "min_hold") c.success_mode = SuccessMode::min_hold;
    else throw ConfigError(r.field("success_mode") + ": expected 'hold_to_end' or 'min_hold'");
  }
  r.get("success_min_hold", c.success_min_hold);
  r.get("h_floor", c.h_floor);
  r.get("pitch_gate", c.pitch_gate);
  r.get("a_max", c.a_max);
  r.get("settle_max_time", c.settle_max_time);
  r.get("settle_min_time", c.settle_min_time);
  r.get("settle_kinetic_energy", c.settle_kinetic_energy);
  r.get("max_reset_attempts", c.max_reset_attempts);
  r.finish();
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return c;
}

Json to_json(const RandomizationConfig& c) {
  Json j;
  j["mass"] = range_json(c.mass);
  j["com_offset"] = range_json(c.com_offset);
  j["friction_ground"] = range_json(c.friction_ground);
  j["friction_actuator"] = range_json(c.friction_actuator);
  j["gain"] = range_json(c.gain);
  j["imu_offset_deg"] = range_json(c.imu_offset_deg);
  j["allow_widened"] = c.allow_widened;
  return j;
}

RandomizationConfig randomization_config_from_json(const Json& j, const std::string& where) {
  RandomizationConfig c;
  Reader r(j, where);
  auto range = [&](const char* key, Range& out) {
    if (const Json* v = r.sub(key)) out = range_from(*v, r.field(key));
  };
  range("mass", c.mass);
  range("com_offset", c.com_offset);
  range("friction_ground", c.friction_ground);
  range("friction_actuator", c.friction_actuator);
  range("gain", c.gain);
  range("imu_offset_deg", c.imu_offset_deg);
  r.get("allow_widened", c.allow_widened);
  r.finish();
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return c;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["widths"] = c.widths;
  j["critic_widths"] = c.critic_widths;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["gamma"] = c.gamma;
  j["tau"] = c.tau;
  j["n_parallel_envs"] = c.n_parallel_envs;
  j["total_steps"] = c.total_steps;
  j["replay_capacity"] = c.replay_capacity;
  j["target_entropy"] = c.target_entropy;
  j["init_temperature"] = c.init_temperature;
  j["warmup_steps"] = c.warmup_steps;
  j["utd_ratio"] = c.utd_ratio;
  j["policy_delay"] = c.effective_policy_delay();
  j["adam_beta1"] = c.effective_beta1();
  j["adam_beta2"] = c.adam_beta2;
  j["renorm"] = {{"momentum", c.renorm.momentum},
                 {"eps", c.renorm.eps},
                 {"r_max", c.renorm.r_max},
                 {"d_max", c.renorm.d_max},
                 {"warmup_steps", c.renorm.warmup_steps}};
  j["normalize_observations"] = c.normalize_observations;
  j["seeds"] = c.seeds;
  j["log_interval"] = c.log_interval;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["env_threads"] = c.env_threads;
  return j;
}

TrainConfig train_config_from_json(const Json& j, const std::string& where) {
  TrainConfig c;
  Reader r(j, where);
  if (auto a = r.string("algorithm")) {
    try {
      c.algorithm = parse_algorithm(*a);
    } catch (const ArgumentError& e) {
      throw ConfigError(r.field("algorithm") + ": " + e.what());
    }
  }
  r.get("widths", c.widths);
  r.get("critic_widths", c.critic_widths);
  r.get("learning_rate", c.learning_rate);
  r.get("batch_size", c.batch_size);
  r.get("gamma", c.gamma);
  r.get("tau", c.tau);
  r.get("n_parallel_envs", c.n_parallel_envs);
  r.get("total_steps", c.total_steps);
  r.get("replay_capacity", c.replay_capacity);
  r.get("target_entropy", c.target_entropy);
  r.get("init_temperature", c.init_temperature);
  r.get("warmup_steps", c.warmup_steps);
  r.get("utd_ratio", c.utd_ratio);
  r.get("policy_delay", c.policy_delay);
  r.get("adam_beta1", c.adam_beta1);
  r.get("adam_beta2", c.adam_beta2);
  if (const Json* rn = r.sub("renorm")) {
    Reader rr(*rn, r.field("renorm"));
    rr.get("momentum", c.renorm.momentum);
    rr.get("eps", c.renorm.eps);
    rr.get("r_max", c.renorm.r_max);
    rr.get("d_max", c.renorm.d_max);
    rr.get("warmup_steps", c.renorm.warmup_steps);
    rr.finish();
  }
  r.get("normalize_observations", c.normalize_observations);
  r.get("seeds", c.seeds);
  r.get("log_interval", c.log_interval);
  r.get("checkpoint_interval", c.checkpoint_interval);
  r.get("env_threads", c.env_threads);
  r.finish();
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return c;
}

Json to_json(const RandomizationSample& s) {
  return {{"mass_scale", s.mass_scale},
          {"com_offset_scale", s.com_offset_scale},
          {"friction_scale_ground", s.friction_scale_ground},
          {"friction_scale_actuator", s.friction_scale_actuator},
          {"gain_scale", s.gain_scale},
          {"imu_offset_rpy_deg", s.imu_offset_rpy_deg}};
}

RandomizationSample randomization_sample_from_json(const Json& j) {
  RandomizationSample s;
  s.mass_scale = j.at("mass_scale").get<double>();
  s.com_offset_scale = j.at("com_offset_scale").get<double>();
  s.friction_scale_ground = j.at("friction_scale_ground").get<double>();
  s.friction_scale_actuator = j.at("friction_scale_actuator").get<double>();
  s.gain_scale = j.at("gain_scale").get<double>();
  s.imu_offset_rpy_deg = j.at("imu_offset_rpy_deg").get<std::array<double, 3>>();
  return s;
}

namespace bin {

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated checkpoint");
  return v;
}

void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated checkpoint");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto n = read_u64(is);
  if (n > (1ULL << 32)) throw std::runtime_error("corrupt checkpoint string");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("truncated checkpoint");
  return s;
}

}  // namespace bin
}  // namespace getup
