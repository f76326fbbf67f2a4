#include "getup/morph/normalize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/core/rotation.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

std::string NormalizationReport::to_json() const {
  nlohmann::json j;
  j["morphology"] = morphology_id;
  j["fixes"] = fixes;
  j["unresolved"] = unresolved;
  return j.dump(2) + "\n";
}

namespace {

std::string fmt3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

std::string element_name(mjsElement* el) { return mjs_getString(mjs_getName(el)); }

// Lower-case tokens split on punctuation and camelCase boundaries.
std::vector<std::string> tokenize(const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    const bool alnum = std::isalnum(static_cast<unsigned char>(c)) != 0;
    const bool boundary =
        !alnum || (std::isupper(static_cast<unsigned char>(c)) && i > 0 &&
                   std::islower(static_cast<unsigned char>(name[i - 1])));
    if (boundary && !cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
    if (alnum) cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

const std::map<std::string, JointGroup>& group_words() {
  static const std::map<std::string, JointGroup> words = {
      {"shoulder", JointGroup::shoulder}, {"sho", JointGroup::shoulder}, {"elbow", JointGroup::elbow},
      {"elb", JointGroup::elbow},         {"hip", JointGroup::hip},      {"knee", JointGroup::knee},
      {"ankle", JointGroup::ankle},       {"ank", JointGroup::ankle}};
  return words;
}

struct NameGuess {
  std::optional<Side> side;
  std::optional<JointGroup> group;
  bool says_pitch = false;
};

NameGuess guess(const std::string& name) {
  NameGuess g;
  for (const std::string& t : tokenize(name)) {
    if (t == "l" || t == "left") g.side = Side::left;
    if (t == "r" || t == "right") g.side = Side::right;
    if (t == "pitch") g.says_pitch = true;
    if (auto it = group_words().find(t); it != group_words().end()) {
      g.group = it->second;
      continue;
    }
    // "lhip", "rknee"
    if (t.size() > 1 && (t[0] == 'l' || t[0] == 'r')) {
      if (auto it = group_words().find(t.substr(1)); it != group_words().end()) {
        g.group = it->second;
        g.side = t[0] == 'l' ? Side::left : Side::right;
      }
    }
  }
  return g;
}

// World-frame quantities at the standing pose of a compiled model.
struct StandingFrame {
  ModelPtr model;
  DataPtr data;
};

// Upright base; joints at the "init" keyframe, or at the reference
// configuration (body frames free of their own joint rotation) if
// `reference` is set or no keyframe exists.
StandingFrame pose_standing(mjSpec* spec, bool reference = false) {
  StandingFrame f;
  f.model = compile_spec(spec);
  f.data = make_data(f.model.get());
  const mjModel* m = f.model.get();
  mjData* d = f.data.get();
  const int key = mj_name2id(m, mjOBJ_KEY, "init");
  if (key >= 0 && !reference) {
    std::copy(m->key_qpos + static_cast<std::ptrdiff_t>(key) * m->nq,
              m->key_qpos + static_cast<std::ptrdiff_t>(key + 1) * m->nq, d->qpos);
  } else {
    std::copy(m->qpos0, m->qpos0 + m->nq, d->qpos);
  }
  if (const int fj = free_joint(m); fj >= 0) {
    const int a = m->jnt_qposadr[fj];
    d->qpos[a + 3] = 1.0;
    d->qpos[a + 4] = d->qpos[a + 5] = d->qpos[a + 6] = 0.0;
  }
  mj_kinematics(m, d);
  return f;
}

Mat3 body_rotation(const mjData* d, int body) {
  Mat3 R;
  const double* x = d->xmat + 9 * body;
  R << x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8];
  return R;
}

class Normalizer {
 public:
  Normalizer(const std::string& xml, const std::string& id, const NormalizeOptions& opt)
      : spec_(parse_mjcf(xml)), opt_(opt) {
    report_.morphology_id = id;
  }

  NormalizedModel run(const std::string& raw_xml) {
    {
      StandingFrame f = pose_standing(spec_.get());
      if (free_joint(f.model.get()) < 0) {
        report_.unresolved.push_back("model has no free joint; the floating base cannot be placed");
        return {raw_xml, report_};
      }
    }
    rename_joints();
    reorient_axes();
    add_sites();
    ensure_keyframe();
    if (report_.unresolved.empty()) stabilize();
    if (report_.fixes.empty()) return {raw_xml, report_};
    return {save_mjcf(spec_.get()), report_};
  }

 private:
  mjsJoint* find_joint(const std::string& name) {
    mjsElement* el = mjs_findElement(spec_.get(), mjOBJ_JOINT, name.c_str());
    return el ? mjs_asJoint(el) : nullptr;
  }

  mjsActuator* actuator_for_joint(const std::string& joint) {
    for (mjsElement* el = mjs_firstElement(spec_.get(), mjOBJ_ACTUATOR); el;
         el = mjs_nextElement(spec_.get(), el)) {
      mjsActuator* a = mjs_asActuator(el);
      if (a->trntype == mjTRN_JOINT && std::string(mjs_getString(a->target)) == joint) return a;
    }
    return nullptr;
  }

  void rename_joints() {
    StandingFrame f = pose_standing(spec_.get());
    const mjModel* m = f.model.get();
    for (JointGroup g : kAllGroups) {
      for (Side side : kSides) {
        const std::string canon = canonical_joint_name(side, g);
        const bool has_actuator = mjs_findElement(spec_.get(), mjOBJ_ACTUATOR, canon.c_str()) != nullptr;
        if (find_joint(canon) && has_actuator) continue;

        // Best candidate: matching side and group, preferring an explicit
        // "pitch" token, then the axis most aligned with world y.
        int best = -1;
        double best_score = -1.0;
        for (int j = 0; j < m->njnt; ++j) {
          if (m->jnt_type[j] != mjJNT_HINGE) continue;
          const std::string name = object_name(m, mjOBJ_JOINT, j);
          const NameGuess ng = guess(name);
          if (ng.side != side || ng.group != g) continue;
          const double score = (ng.says_pitch ? 2.0 : 0.0) + std::abs(f.data->xaxis[3 * j + 1]);
          if (score > best_score) {
            best_score = score;
            best = j;
          }
        }
        if (best < 0) {
          report_.unresolved.push_back("no " + std::string(to_string(side)) + " " + std::string(to_string(g)) +
                                       " joint found by name");
          continue;
        }
        const std::string old_name = object_name(m, mjOBJ_JOINT, best);
        if (old_name != canon && find_joint(canon)) {
          report_.unresolved.push_back("cannot rename " + old_name + ": " + canon + " already names another joint");
          continue;
        }
        mjsActuator* act = actuator_for_joint(old_name);
        if (!act) {
          report_.unresolved.push_back("joint " + old_name + " has no actuator");
          continue;
        }
        if (old_name != canon) {
          mjs_setName(find_joint(old_name)->element, canon.c_str());
          mjs_setString(act->target, canon.c_str());
          for (mjsElement* el = mjs_firstElement(spec_.get(), mjOBJ_SENSOR); el;
               el = mjs_nextElement(spec_.get(), el)) {
            mjsSensor* s = mjs_asSensor(el);
            if (s->objtype == mjOBJ_JOINT && std::string(mjs_getString(s->objname)) == old_name) {
              mjs_setString(s->objname, canon.c_str());
            }
          }
          report_.fixes.push_back("renamed joint " + old_name + " -> " + canon);
        }
        const std::string old_act = element_name(act->element);
        if (old_act != canon) {
          mjs_setName(act->element, canon.c_str());
          report_.fixes.push_back("renamed actuator " + (old_act.empty() ? "<unnamed>" : old_act) + " -> " + canon);
        }
      }
    }
  }

  void reorient_axes() {
    StandingFrame f = pose_standing(spec_.get(), true);
    const mjModel* m = f.model.get();
    for (JointGroup g : kAllGroups) {
      for (Side side : kSides) {
        const std::string canon = canonical_joint_name(side, g);
        const int j = mj_name2id(m, mjOBJ_JOINT, canon.c_str());
        if (j < 0) continue;
        const Vec3 axis_world(f.data->xaxis[3 * j], f.data->xaxis[3 * j + 1], f.data->xaxis[3 * j + 2]);
        if (std::abs(axis_world.y()) >= 0.95) continue;
        const Mat3 R = body_rotation(f.data.get(), m->jnt_bodyid[j]);
        const double s = axis_world.y() < 0.0 ? -1.0 : 1.0;
        const Vec3 local = R.transpose() * Vec3(0.0, s, 0.0);
        mjsJoint* js = find_joint(canon);
        const Vec3 old(js->axis[0], js->axis[1], js->axis[2]);
        for (int k = 0; k < 3; ++k) js->axis[k] = std::abs(local[k]) < 1e-12 ? 0.0 : local[k];
        report_.fixes.push_back("reoriented " + canon + " axis from (" + fmt3(old.x()) + ", " + fmt3(old.y()) + ", " +
                                fmt3(old.z()) + ") to pitch (" + fmt3(local.x()) + ", " + fmt3(local.y()) + ", " +
                                fmt3(local.z()) + ")");
      }
    }
  }

  void add_site(mjsBody* body, const char* name, const Vec3& pos, const std::string& why) {
    mjsSite* site = mjs_addSite(body, nullptr);
    mjs_setName(site->element, name);
    for (int k = 0; k < 3; ++k) site->pos[k] = pos[k];
    report_.fixes.push_back(std::string("added ") + name + " site " + why);
  }

  mjsBody* spec_body(const mjModel* m, int body) {
    return mjs_findBody(spec_.get(), object_name(m, mjOBJ_BODY, body).c_str());
  }

  void add_sites() {
    StandingFrame f = pose_standing(spec_.get());
    const mjModel* m = f.model.get();
    const mjData* d = f.data.get();
    const int root = m->jnt_bodyid[free_joint(m)];

    if (mj_name2id(m, mjOBJ_SITE, "imu") < 0) {
      if (mjsBody* b = spec_body(m, root)) {
        add_site(b, "imu", Vec3::Zero(), "at the floating-base origin");
      } else {
        report_.unresolved.push_back("floating-base body is unnamed; cannot attach imu site");
      }
    }

    if (mj_name2id(m, mjOBJ_SITE, "head") < 0) {
      int head = -1;
      for (int b = 1; b < m->nbody && head < 0; ++b) {
        for (const std::string& t : tokenize(object_name(m, mjOBJ_BODY, b))) {
          if (t == "head") head = b;
        }
      }
      if (head < 0) {
        double top = -1e9;
        for (int b = 1; b < m->nbody; ++b) {
          if (d->xpos[3 * b + 2] > top) {
            top = d->xpos[3 * b + 2];
            head = b;
          }
        }
      }
      Vec3 pos = Vec3::Zero();
      if (m->body_geomnum[head] > 0) {
        const int g = m->body_geomadr[head];
        pos = Vec3(m->geom_pos[3 * g], m->geom_pos[3 * g + 1], m->geom_pos[3 * g + 2]);
      }
      if (mjsBody* b = spec_body(m, head)) {
        add_site(b, "head", pos, "on body " + object_name(m, mjOBJ_BODY, head));
      } else {
        report_.unresolved.push_back("head body is unnamed; cannot attach head site");
      }
    }

    for (Side side : kSides) {
      const std::string site_name = std::string(to_string(side)) + "_foot";
      if (mj_name2id(m, mjOBJ_SITE, site_name.c_str()) >= 0) continue;
      const int ankle = mj_name2id(m, mjOBJ_JOINT, canonical_joint_name(side, JointGroup::ankle).c_str());
      if (ankle < 0) {
        report_.unresolved.push_back("no " + std::string(to_string(side)) + " ankle; cannot place foot frame");
        continue;
      }
      // Lowest body in the subtree below the ankle carries the sole.
      int foot = m->jnt_bodyid[ankle];
      for (int b = foot + 1; b < m->nbody; ++b) {
        int p = b;
        while (p > 0 && p != m->jnt_bodyid[ankle]) p = m->body_parentid[p];
        if (p == m->jnt_bodyid[ankle] && d->xpos[3 * b + 2] < d->xpos[3 * foot + 2]) foot = b;
      }
      double sole = 1e9;
      for (int g = m->body_geomadr[foot]; g < m->body_geomadr[foot] + m->body_geomnum[foot]; ++g) {
        // Body-local box extent is enough for the sole height.
        const double* aabb = m->geom_aabb + 6 * g;
        const Mat3 Rg = [&] {
          Mat3 R;
          const double* x = d->geom_xmat + 9 * g;
          R << x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8];
          return R;
        }();
        const Vec3 c = Vec3(d->geom_xpos[3 * g], d->geom_xpos[3 * g + 1], d->geom_xpos[3 * g + 2]) +
                       Rg * Vec3(aabb[0], aabb[1], aabb[2]);
        const double half = std::abs(Rg(2, 0)) * aabb[3] + std::abs(Rg(2, 1)) * aabb[4] + std::abs(Rg(2, 2)) * aabb[5];
        sole = std::min(sole, c.z() - half);
      }
      const Vec3 origin(d->xpos[3 * foot], d->xpos[3 * foot + 1], d->xpos[3 * foot + 2]);
      const Vec3 world = m->body_geomnum[foot] > 0 ? Vec3(origin.x(), origin.y(), sole) : origin;
      const Vec3 local = body_rotation(d, foot).transpose() * (world - origin);
      if (mjsBody* b = spec_body(m, foot)) {
        add_site(b, site_name.c_str(), local, "at the sole of " + object_name(m, mjOBJ_BODY, foot));
      } else {
        report_.unresolved.push_back("foot body is unnamed; cannot attach " + site_name);
      }
    }
  }

  void ensure_keyframe() {
    if (mjs_findElement(spec_.get(), mjOBJ_KEY, "init")) return;
    ModelPtr m = compile_spec(spec_.get());
    mjsKey* key = mjs_addKey(spec_.get());
    mjs_setName(key->element, "init");
    mjs_setDouble(key->qpos, m->qpos0, m->nq);
    report_.fixes.push_back("added init keyframe from the reference configuration");
  }

  void stabilize() {
    ModelPtr model = compile_spec(spec_.get());
    const mjModel* m = model.get();
    MorphologySpec spec;
    try {
      spec = load_morphology_xml(save_mjcf(spec_.get()), {}, {});
    } catch (const std::exception& e) {
      // validation problems other than stability are reported, not thrown
      report_.unresolved.push_back(std::string("normalized model does not load: ") + e.what());
      return;
    }
    RobotBinding binding = bind_robot(m, spec);
    const double base = standing_pitch_excursion(m, binding, opt_.stability_seconds);
    if (base <= opt_.max_trunk_pitch) return;

    const auto& hips = binding.pitch[static_cast<std::size_t>(JointGroup::hip)];
    const auto& ankles = binding.pitch[static_cast<std::size_t>(JointGroup::ankle)];
    const std::vector<double> original = binding.initial_qpos;
    const JointLimit hip_lim = spec.group_limit(JointGroup::hip);
    const JointLimit ankle_lim = spec.group_limit(JointGroup::ankle);
    const double hip0 = hips[0].sign * original[hips[0].qpos];
    const double ankle0 = ankles[0].sign * original[ankles[0].qpos];

    struct Candidate {
      double dh, da, cost;
    };
    std::vector<Candidate> grid;
    for (int i = -8; i <= 8; ++i) {
      for (int k = -8; k <= 8; ++k) {
        if (i == 0 && k == 0) continue;
        grid.push_back({0.05 * i, 0.05 * k, std::abs(0.05 * i) + std::abs(0.05 * k)});
      }
    }
    std::stable_sort(grid.begin(), grid.end(), [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });

    std::optional<Candidate> chosen;
    double chosen_excursion = base;
    for (const Candidate& c : grid) {
      const double hip = std::clamp(hip0 + c.dh, hip_lim.lo, hip_lim.hi);
      const double ankle = std::clamp(ankle0 + c.da, ankle_lim.lo, ankle_lim.hi);
      binding.initial_qpos = original;
      for (const auto& ch : hips) binding.initial_qpos[ch.qpos] = ch.sign * hip;
      for (const auto& ch : ankles) binding.initial_qpos[ch.qpos] = ch.sign * ankle;
      for (auto& h : binding.holds) h.target = binding.initial_qpos[m->jnt_qposadr[m->actuator_trnid[2 * h.actuator]]];
      const double ex = standing_pitch_excursion(m, binding, opt_.stability_seconds);
      if (ex < chosen_excursion) {
        chosen_excursion = ex;
        chosen = Candidate{hip - hip0, ankle - ankle0, c.cost};
      }
      // Accept the smallest adjustment that leaves a margin.
      if (ex <= 0.66 * opt_.max_trunk_pitch) break;
    }
    if (!chosen || chosen_excursion > opt_.max_trunk_pitch) {
      report_.unresolved.push_back("initial pose topples (trunk pitch " + fmt3(base) +
                                   " rad); no hip/ankle pitch adjustment within 0.4 rad stabilizes it");
      return;
    }
    mjsKey* key = mjs_asKey(mjs_findElement(spec_.get(), mjOBJ_KEY, "init"));
    std::vector<double> q(original);
    for (const auto& ch : hips) q[ch.qpos] = ch.sign * (hip0 + chosen->dh);
    for (const auto& ch : ankles) q[ch.qpos] = ch.sign * (ankle0 + chosen->da);
    mjs_setDouble(key->qpos, q.data(), static_cast<int>(q.size()));
    report_.fixes.push_back("adjusted initial hip pitch by " + fmt3(chosen->dh) + " rad and ankle pitch by " +
                            fmt3(chosen->da) + " rad (standing trunk pitch " + fmt3(base) + " -> " +
                            fmt3(chosen_excursion) + " rad)");
  }

  SpecPtr spec_;
  NormalizeOptions opt_;
  NormalizationReport report_;
};

}  // namespace

NormalizedModel normalize_model(const std::string& raw_xml, const std::string& id, const NormalizeOptions& options) {
  Normalizer n(raw_xml, id, options);
  return n.run(raw_xml);
}

std::filesystem::path normalized_path(const std::filesystem::path& path) {
  auto out = path;
  out.replace_filename(path.stem().string() + ".normalized" + path.extension().string());
  return out;
}

NormalizationReport normalize_model_file(const std::filesystem::path& path, const NormalizeOptions& options) {
  const NormalizedModel out = normalize_model(read_text_file(path), path.stem().string(), options);
  write_text_file(normalized_path(path), out.xml);
  auto report_path = path;
  report_path.replace_filename(path.stem().string() + ".normalization.json");
  write_text_file(report_path, out.report.to_json());
  return out.report;
}

}  // namespace getup
