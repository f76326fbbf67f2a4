#include "getup/morph/mujoco_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/core/rotation.hpp"

namespace getup {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelPreparationError("cannot read model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SpecPtr parse_mjcf(const std::string& xml) {
  char err[1024] = {0};
  SpecPtr spec(mj_parseXMLString(xml.c_str(), nullptr, err, sizeof(err)));
  if (!spec) throw ModelPreparationError(std::string("MJCF parse failed: ") + err);
  return spec;
}

ModelPtr compile_spec(mjSpec* spec) {
  ModelPtr m(mj_compile(spec, nullptr));
  if (!m) throw ModelPreparationError(std::string("MJCF compile failed: ") + mjs_getError(spec));
  return m;
}

ModelPtr compile_mjcf(const std::string& xml) {
  auto spec = parse_mjcf(xml);
  return compile_spec(spec.get());
}

std::string save_mjcf(mjSpec* spec) {
  // Saving needs a compiled spec.
  ModelPtr m(mj_compile(spec, nullptr));
  if (!m) throw ModelPreparationError(std::string("MJCF compile failed: ") + mjs_getError(spec));
  char err[1024] = {0};
  int size = mj_saveXMLString(spec, nullptr, 0, err, sizeof(err));
  if (size <= 0) throw ModelPreparationError(std::string("MJCF save failed: ") + err);
  std::string out(static_cast<std::size_t>(size) + 1, '\0');
  if (mj_saveXMLString(spec, out.data(), static_cast<int>(out.size()), err, sizeof(err)) != 0) {
    throw ModelPreparationError(std::string("MJCF save failed: ") + err);
  }
  out.resize(std::strlen(out.c_str()));
  return out;
}

ModelPtr copy_model(const mjModel* m) { return ModelPtr(mj_copyModel(nullptr, m)); }

DataPtr make_data(const mjModel* m) {
  DataPtr d(mj_makeData(m));
  if (!d) throw EnvironmentFault("mj_makeData failed");
  return d;
}

std::string object_name(const mjModel* m, mjtObj type, int id) {
  const char* n = mj_id2name(m, type, id);
  return n ? std::string(n) : std::string();
}

std::string joint_key(const mjModel* m, int j) {
  std::string name = object_name(m, mjOBJ_JOINT, j);
  return name.empty() ? "joint" + std::to_string(j) : name;
}

int free_joint(const mjModel* m) {
  for (int j = 0; j < m->njnt; ++j) {
    if (m->jnt_type[j] == mjJNT_FREE) return j;
  }
  return -1;
}

namespace {

// World z-extent of one geom: {min, max}.
std::pair<double, double> geom_z_extent(const mjModel* m, const mjData* d, int g) {
  const double* pos = d->geom_xpos + 3 * g;
  const double* R = d->geom_xmat + 9 * g;  // row-major
  const double* s = m->geom_size + 3 * g;
  // Row 2 of R maps local axes to world z.
  const double rz0 = R[6], rz1 = R[7], rz2 = R[8];
  double half = 0.0;
  switch (m->geom_type[g]) {
    case mjGEOM_SPHERE:
      half = s[0];
      break;
    case mjGEOM_CAPSULE:
      half = std::abs(rz2) * s[1] + s[0];
      break;
    case mjGEOM_CYLINDER:
      half = std::abs(rz2) * s[1] + s[0] * std::sqrt(std::max(0.0, 1.0 - rz2 * rz2));
      break;
    case mjGEOM_BOX:
      half = std::abs(rz0) * s[0] + std::abs(rz1) * s[1] + std::abs(rz2) * s[2];
      break;
    case mjGEOM_ELLIPSOID:
      half = std::sqrt(rz0 * rz0 * s[0] * s[0] + rz1 * rz1 * s[1] * s[1] + rz2 * rz2 * s[2] * s[2]);
      break;
    default: {
      // Local AABB (center, half sizes).
      const double* aabb = m->geom_aabb + 6 * g;
      const double cz = pos[2] + rz0 * aabb[0] + rz1 * aabb[1] + rz2 * aabb[2];
      half = std::abs(rz0) * aabb[3] + std::abs(rz1) * aabb[4] + std::abs(rz2) * aabb[5];
      return {cz - half, cz + half};
    }
  }
  return {pos[2] - half, pos[2] + half};
}

}  // namespace

double lowest_robot_point(const mjModel* m, const mjData* d) {
  double z = std::numeric_limits<double>::infinity();
  for (int g = 0; g < m->ngeom; ++g) {
    if (m->geom_bodyid[g] == 0) continue;
    z = std::min(z, geom_z_extent(m, d, g).first);
  }
  return z;
}

double highest_robot_point(const mjModel* m, const mjData* d) {
  double z = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < m->ngeom; ++g) {
    if (m->geom_bodyid[g] == 0) continue;
    z = std::max(z, geom_z_extent(m, d, g).second);
  }
  return z;
}

RobotBinding bind_robot(const mjModel* m, const MorphologySpec& spec) {
  RobotBinding b;
  const int fj = free_joint(m);
  if (fj < 0) throw ModelPreparationError(spec.id + ": model has no free-floating base");
  b.free_qpos = m->jnt_qposadr[fj];
  b.free_dof = m->jnt_dofadr[fj];

  auto site = [&](const std::string& name) {
    const int id = mj_name2id(m, mjOBJ_SITE, name.c_str());
    if (id < 0) throw ModelPreparationError(spec.id + ": missing reference site '" + name + "'");
    return id;
  };
  b.imu_site = site(spec.sites.imu);
  b.head_site = site(spec.sites.head);
  b.left_foot_site = site(spec.sites.left_foot);
  b.right_foot_site = site(spec.sites.right_foot);
  b.trunk_body = m->site_bodyid[b.imu_site];

  std::vector<bool> is_pitch(static_cast<std::size_t>(m->nu), false);
  for (JointGroup g : kAllGroups) {
    for (const GroupActuator& ga : spec.group(g)) {
      const int a = mj_name2id(m, mjOBJ_ACTUATOR, ga.actuator.c_str());
      if (a < 0 || m->actuator_trntype[a] != mjTRN_JOINT) {
        throw UnresolvableMorphology(spec.id + ": actuator '" + ga.actuator + "' not found");
      }
      RobotBinding::Channel c;
      c.actuator = a;
      c.joint = m->actuator_trnid[2 * a];
      c.qpos = m->jnt_qposadr[c.joint];
      c.dof = m->jnt_dofadr[c.joint];
      c.sign = ga.sign;
      b.pitch[static_cast<std::size_t>(g)][static_cast<std::size_t>(ga.side)] = c;
      is_pitch[static_cast<std::size_t>(a)] = true;
    }
  }

  b.initial_qpos.assign(m->qpos0, m->qpos0 + m->nq);
  b.initial_qpos[b.free_qpos + 0] = 0.0;
  b.initial_qpos[b.free_qpos + 1] = 0.0;
  b.initial_qpos[b.free_qpos + 2] = 0.0;
  b.initial_qpos[b.free_qpos + 3] = 1.0;
  b.initial_qpos[b.free_qpos + 4] = 0.0;
  b.initial_qpos[b.free_qpos + 5] = 0.0;
  b.initial_qpos[b.free_qpos + 6] = 0.0;
  for (int j = 0; j < m->njnt; ++j) {
    const auto it = spec.initial_pose.find(joint_key(m, j));
    if (it != spec.initial_pose.end()) b.initial_qpos[m->jnt_qposadr[j]] = it->second;
  }

  for (int a = 0; a < m->nu; ++a) {
    if (is_pitch[static_cast<std::size_t>(a)] || m->actuator_trntype[a] != mjTRN_JOINT) continue;
    const int j = m->actuator_trnid[2 * a];
    b.holds.push_back({a, b.initial_qpos[m->jnt_qposadr[j]]});
  }
  return b;
}

void place_standing(const mjModel* m, mjData* d, const RobotBinding& b, double clearance) {
  mj_resetData(m, d);
  std::copy(b.initial_qpos.begin(), b.initial_qpos.end(), d->qpos);
  mj_kinematics(m, d);
  d->qpos[b.free_qpos + 2] = clearance - lowest_robot_point(m, d);
  hold_initial_pose(m, d, b);
  mj_forward(m, d);
}

void hold_initial_pose(const mjModel* m, mjData* d, const RobotBinding& b) {
  (void)m;
  for (const auto& groups : b.pitch) {
    for (const auto& c : groups) d->ctrl[c.actuator] = b.initial_qpos[c.qpos];
  }
  for (const auto& h : b.holds) d->ctrl[h.actuator] = h.target;
}

double head_height_above_feet(const mjData* d, const RobotBinding& b) {
  const double feet = 0.5 * (d->site_xpos[3 * b.left_foot_site + 2] + d->site_xpos[3 * b.right_foot_site + 2]);
  return d->site_xpos[3 * b.head_site + 2] - feet;
}

std::array<double, 9> imu_rotation(const mjData* d, const RobotBinding& b) {
  std::array<double, 9> r{};
  std::copy(d->site_xmat + 9 * b.imu_site, d->site_xmat + 9 * b.imu_site + 9, r.begin());
  return r;
}

double standing_pitch_excursion(const mjModel* m, const RobotBinding& b, double seconds) {
  DataPtr d = make_data(m);
  place_standing(m, d.get(), b, 0.0);
  const int steps = static_cast<int>(std::lround(seconds / m->opt.timestep));
  double worst = 0.0;
  for (int i = 0; i < steps; ++i) {
    mj_step(m, d.get());
    const auto r = imu_rotation(d.get(), b);
    Mat3 R;
    R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
    const double pitch = matrix_to_rpy(R).y();
    if (!std::isfinite(pitch)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(pitch));
  }
  return worst;
}

}  // namespace getup
