#include "getup/morph/morphology.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

std::string_view to_string(JointGroup g) {
  switch (g) {
    case JointGroup::shoulder: return "shoulder";
    case JointGroup::elbow: return "elbow";
    case JointGroup::hip: return "hip";
    case JointGroup::knee: return "knee";
    case JointGroup::ankle: return "ankle";
  }
  return "?";
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

std::optional<JointGroup> parse_group(std::string_view name) {
  for (JointGroup g : kAllGroups) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

std::optional<Side> parse_side(std::string_view name) {
  if (name == "left") return Side::left;
  if (name == "right") return Side::right;
  return std::nullopt;
}

std::string canonical_joint_name(Side side, JointGroup group) {
  return std::string(to_string(side)) + "_" + std::string(to_string(group)) + "_pitch";
}

namespace {

JointLimit canonical_limit(const MorphologySpec& spec, const GroupActuator& ga) {
  const auto it = spec.joint_limits.find(ga.joint);
  if (it == spec.joint_limits.end()) return {-std::numbers::pi, std::numbers::pi};
  const JointLimit l = it->second;
  return ga.sign > 0 ? l : JointLimit{-l.hi, -l.lo};
}

}  // namespace

JointLimit MorphologySpec::group_limit(JointGroup g) const {
  JointLimit out{-std::numbers::pi * 4, std::numbers::pi * 4};
  for (const GroupActuator& ga : group(g)) {
    const JointLimit l = canonical_limit(*this, ga);
    out.lo = std::max(out.lo, l.lo);
    out.hi = std::min(out.hi, l.hi);
  }
  return out;
}

void MorphologySpec::validate() const {
  std::ostringstream problems;
  for (JointGroup g : kAllGroups) {
    const auto& acts = group(g);
    if (acts.empty()) problems << " group " << to_string(g) << " has no actuator;";
    for (std::size_t i = 0; i + 1 < acts.size(); ++i) {
      const JointLimit a = canonical_limit(*this, acts[i]);
      const JointLimit b = canonical_limit(*this, acts[i + 1]);
      if (std::abs(a.lo - b.lo) > 1e-6 || std::abs(a.hi - b.hi) > 1e-6) {
        problems << " group " << to_string(g) << " has asymmetric left/right limits;";
      }
    }
  }
  if (!(height >= 0.2 && height <= 1.5)) problems << " height " << height << " outside [0.2, 1.5];";
  if (!(nominal_head_height > 0.0 && nominal_head_height <= height)) {
    problems << " nominal head height " << nominal_head_height << " not in (0, height];";
  }
  if (!(mass > 0.0)) problems << " mass must be positive;";
  if (dof < 10) problems << " dof " << dof << " < 10;";
  for (const auto& [joint, angle] : initial_pose) {
    const auto it = joint_limits.find(joint);
    if (it != joint_limits.end() && (angle < it->second.lo - 1e-9 || angle > it->second.hi + 1e-9)) {
      problems << " initial angle of " << joint << " outside its limits;";
    }
  }
  const std::string msg = problems.str();
  if (!msg.empty()) throw ArgumentError("morphology '" + id + "' invalid:" + msg);
}

MorphologyOverrides load_overrides(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("override file " + path.string() + ": " + e.what());
  }
  MorphologyOverrides o;
  try {
    if (root["id"]) o.id = root["id"].as<std::string>();
    if (root["height"]) o.height = root["height"].as<double>();
    if (root["mass"]) o.mass = root["mass"].as<double>();
    if (root["keyframe"]) o.keyframe = root["keyframe"].as<std::string>();
    if (const auto s = root["sites"]) {
      SiteNames names;
      if (s["imu"]) names.imu = s["imu"].as<std::string>();
      if (s["head"]) names.head = s["head"].as<std::string>();
      if (s["left_foot"]) names.left_foot = s["left_foot"].as<std::string>();
      if (s["right_foot"]) names.right_foot = s["right_foot"].as<std::string>();
      o.sites = names;
    }
    if (const auto groups = root["groups"]) {
      for (const auto& kv : groups) {
        const auto key = kv.first.as<std::string>();
        const auto g = parse_group(key);
        if (!g) throw ConfigError("override file " + path.string() + ": unknown group '" + key + "'");
        MorphologyOverrides::GroupOverride go;
        const auto& v = kv.second;
        if (v["left"]) go.left = v["left"].as<std::string>();
        if (v["right"]) go.right = v["right"].as<std::string>();
        if (v["left_sign"]) go.left_sign = v["left_sign"].as<int>();
        if (v["right_sign"]) go.right_sign = v["right_sign"].as<int>();
        o.groups[*g] = go;
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError("override file " + path.string() + ": " + e.what());
  }
  return o;
}

MorphologySpec load_morphology(const std::filesystem::path& model_path, const MorphologyOverrides& overrides) {
  if (!std::filesystem::exists(model_path)) {
    throw ModelPreparationError("model file not found: " + model_path.string());
  }
  return load_morphology_xml(read_text_file(model_path), model_path, overrides);
}

MorphologySpec load_morphology_xml(const std::string& xml, const std::filesystem::path& model_path,
                                   const MorphologyOverrides& overrides) {
  ModelPtr model = compile_mjcf(xml);
  const mjModel* m = model.get();

  MorphologySpec spec;
  spec.model_path = model_path;
  spec.id = overrides.id.value_or(model_path.stem().string());
  if (overrides.sites) spec.sites = *overrides.sites;

  // Initial pose: named keyframe, else the reference configuration.
  const std::string key_name = overrides.keyframe.value_or("init");
  const int key = mj_name2id(m, mjOBJ_KEY, key_name.c_str());
  if (overrides.keyframe && key < 0) {
    throw ModelPreparationError(spec.id + ": keyframe '" + key_name + "' not found");
  }
  const double* qpos_init = key >= 0 ? m->key_qpos + static_cast<std::ptrdiff_t>(key) * m->nq : m->qpos0;

  for (int j = 0; j < m->njnt; ++j) {
    const int type = m->jnt_type[j];
    if (type != mjJNT_HINGE && type != mjJNT_SLIDE) continue;
    ++spec.dof;
    const std::string name = joint_key(m, j);
    spec.initial_pose[name] = qpos_init[m->jnt_qposadr[j]];
    spec.joint_limits[name] = m->jnt_limited[j]
                                  ? JointLimit{m->jnt_range[2 * j], m->jnt_range[2 * j + 1]}
                                  : JointLimit{-std::numbers::pi, std::numbers::pi};
  }

  for (const char* s : {spec.sites.imu.c_str(), spec.sites.head.c_str(), spec.sites.left_foot.c_str(),
                        spec.sites.right_foot.c_str()}) {
    if (mj_name2id(m, mjOBJ_SITE, s) < 0) {
      throw ModelPreparationError(spec.id + ": reference site '" + s +
                                  "' is missing; add imu/head/left_foot/right_foot sites to the model "
                                  "(normalize_model inserts them)");
    }
  }

  // Resolve pitch groups by canonical actuator names unless overridden.
  std::ostringstream missing;
  for (JointGroup g : kAllGroups) {
    const auto ov = overrides.groups.find(g);
    for (Side side : kSides) {
      std::optional<std::string> name;
      std::optional<int> sign;
      if (ov != overrides.groups.end()) {
        name = side == Side::left ? ov->second.left : ov->second.right;
        sign = side == Side::left ? ov->second.left_sign : ov->second.right_sign;
      }
      const std::string actuator = name.value_or(canonical_joint_name(side, g));
      const int a = mj_name2id(m, mjOBJ_ACTUATOR, actuator.c_str());
      if (a < 0 || m->actuator_trntype[a] != mjTRN_JOINT) {
        missing << " " << actuator;
        continue;
      }
      GroupActuator ga;
      ga.side = side;
      ga.actuator = actuator;
      const int j = m->actuator_trnid[2 * a];
      ga.joint = joint_key(m, j);
      ga.sign = sign.value_or(0);
      spec.joint_groups[static_cast<std::size_t>(g)].push_back(ga);
    }
  }
  if (!missing.str().empty()) {
    throw UnresolvableMorphology(spec.id + ": cannot resolve canonical actuators:" + missing.str() +
                                 " (rename them or supply group overrides)");
  }

  // Measure in the standing pose.
  for (auto& acts : spec.joint_groups) {
    for (auto& ga : acts) {
      if (ga.sign == 0) ga.sign = 1;  // provisional for binding
    }
  }
  const RobotBinding b = bind_robot(m, spec);
  DataPtr data = make_data(m);
  place_standing(m, data.get(), b, 0.0);
  mj_kinematics(m, data.get());

  for (JointGroup g : kAllGroups) {
    const auto ov = overrides.groups.find(g);
    for (auto& ga : spec.joint_groups[static_cast<std::size_t>(g)]) {
      const bool explicit_sign =
          ov != overrides.groups.end() &&
          (ga.side == Side::left ? ov->second.left_sign.has_value() : ov->second.right_sign.has_value());
      if (explicit_sign) continue;
      const int j = m->actuator_trnid[2 * mj_name2id(m, mjOBJ_ACTUATOR, ga.actuator.c_str())];
      ga.sign = data->xaxis[3 * j + 1] >= 0.0 ? 1 : -1;
    }
  }

  spec.nominal_head_height = head_height_above_feet(data.get(), b);
  spec.measured_total_height = highest_robot_point(m, data.get()) - lowest_robot_point(m, data.get());
  spec.measured_mass = mj_getTotalmass(m);
  spec.height = overrides.height.value_or(spec.measured_total_height);
  spec.mass = overrides.mass.value_or(spec.measured_mass);

  spec.validate();
  return spec;
}

}  // namespace getup
