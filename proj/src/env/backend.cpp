#include "getup/env/backend.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "getup/core/error.hpp"
#include "getup/core/rotation.hpp"

namespace getup {

namespace {

constexpr double kDropClearance = 0.002;  // m between the lowest geom and the floor at reset

Mat3 site_rotation(const mjData* d, int site) {
  Mat3 r;
  const mjtNum* x = d->site_xmat + 9 * site;
  r << x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8];
  return r;
}

}  // namespace

std::shared_ptr<const MorphologyAsset> load_asset(const MorphologySpec& spec) {
  auto asset = std::make_shared<MorphologyAsset>();
  asset->spec = spec;
  asset->model = compile_mjcf(read_text_file(spec.model_path));
  asset->binding = bind_robot(asset->model.get(), spec);
  asset->total_mass = mj_getTotalmass(asset->model.get());
  return asset;
}

MujocoBackend::MujocoBackend(std::shared_ptr<const MorphologyAsset> asset) : asset_(std::move(asset)) {
  if (!asset_ || !asset_->model) throw ArgumentError("MujocoBackend needs a loaded morphology");
}

void MujocoBackend::prepare(const RandomizationSample& sample, const EnvConfig& cfg) {
  if (!have_sample_ || !(sim_.sample == sample)) {
    sim_ = apply_randomization(asset_->model.get(), sample);
    have_sample_ = true;
    data_ = make_data(sim_.model.get());
  }
  sim_.model->opt.timestep = cfg.dt / cfg.substeps;
}

bool MujocoBackend::state_finite() const {
  const mjModel* m = sim_.model.get();
  const mjData* d = data_.get();
  for (int i = 0; i < m->nq; ++i) {
    if (!std::isfinite(d->qpos[i])) return false;
  }
  for (int i = 0; i < m->nv; ++i) {
    if (!std::isfinite(d->qvel[i])) return false;
  }
  return true;
}

double MujocoBackend::kinetic_energy_per_kg() const {
  const mjModel* m = sim_.model.get();
  const mjData* d = data_.get();
  std::vector<mjtNum> mv(static_cast<std::size_t>(m->nv));
  mj_mulM(m, d, mv.data(), d->qvel);
  double e = 0.0;
  for (int i = 0; i < m->nv; ++i) e += 0.5 * d->qvel[i] * mv[static_cast<std::size_t>(i)];
  return e / mj_getTotalmass(m);
}

int MujocoBackend::self_collisions() const {
  const mjModel* m = sim_.model.get();
  const mjData* d = data_.get();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d->ncon; ++i) {
    int b1 = m->geom_bodyid[d->contact[i].geom[0]];
    int b2 = m->geom_bodyid[d->contact[i].geom[1]];
    if (b1 == 0 || b2 == 0 || b1 == b2) continue;
    if (m->body_parentid[b1] == b2 || m->body_parentid[b2] == b1) continue;
    if (b1 > b2) std::swap(b1, b2);
    pairs.emplace_back(b1, b2);
  }
  std::sort(pairs.begin(), pairs.end());
  return static_cast<int>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
}

bool MujocoBackend::reset(Rng& rng, const RandomizationSample& sample, const EnvConfig& cfg) {
  prepare(sample, cfg);
  const mjModel* m = sim_.model.get();
  mjData* d = data_.get();
  const RobotBinding& b = asset_->binding;
  const double D = cfg.init_displacement;

  mj_resetData(m, d);
  std::copy(b.initial_qpos.begin(), b.initial_qpos.end(), d->qpos);
  const double roll = uniform(rng, -D, D);
  const double pitch = uniform(rng, -D, D);
  const double yaw = uniform(rng, -D, D);
  const Eigen::Quaterniond quat(rpy_to_matrix(Vec3(roll, pitch, yaw)));
  d->qpos[b.free_qpos + 3] = quat.w();
  d->qpos[b.free_qpos + 4] = quat.x();
  d->qpos[b.free_qpos + 5] = quat.y();
  d->qpos[b.free_qpos + 6] = quat.z();
  for (const auto& group : b.pitch) {
    for (const auto& c : group) {
      double q = d->qpos[c.qpos] + uniform(rng, -D, D);
      if (m->jnt_limited[c.joint]) q = std::clamp(q, m->jnt_range[2 * c.joint], m->jnt_range[2 * c.joint + 1]);
      d->qpos[c.qpos] = q;
    }
  }
  mj_kinematics(m, d);
  d->qpos[b.free_qpos + 2] += kDropClearance - lowest_robot_point(m, d);

  // Zero action: servos hold the displaced configuration while it settles.
  for (const auto& group : b.pitch) {
    for (const auto& c : group) d->ctrl[c.actuator] = d->qpos[c.qpos];
  }
  for (const auto& h : b.holds) d->ctrl[h.actuator] = h.target;
  mj_forward(m, d);

  const double h = m->opt.timestep;
  const int max_steps = static_cast<int>(std::lround(cfg.settle_max_time / h));
  const int min_steps = static_cast<int>(std::lround(cfg.settle_min_time / h));
  for (int i = 0; i < max_steps; ++i) {
    mj_step(m, d);
    if (!state_finite()) return false;
    if (i + 1 >= min_steps && kinetic_energy_per_kg() < cfg.settle_kinetic_energy) break;
  }
  mj_fwdPosition(m, d);
  mj_fwdVelocity(m, d);
  if (!state_finite()) return false;
  t0_ = d->time;
  return true;
}

void MujocoBackend::reset_standing(const RandomizationSample& sample, const EnvConfig& cfg) {
  prepare(sample, cfg);
  place_standing(sim_.model.get(), data_.get(), asset_->binding, 0.0);
  t0_ = data_->time;
}

void MujocoBackend::set_targets(const Vec5& q_des) {
  const RobotBinding& b = asset_->binding;
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    for (const auto& c : b.pitch[g]) data_->ctrl[c.actuator] = c.sign * q_des[g];
  }
}

bool MujocoBackend::advance(const EnvConfig& cfg) {
  const mjModel* m = sim_.model.get();
  mjData* d = data_.get();
  for (int i = 0; i < cfg.substeps; ++i) mj_step(m, d);
  if (!state_finite()) return false;
  // Bring positions, contacts and velocities up to date for the readout.
  mj_fwdPosition(m, d);
  mj_fwdVelocity(m, d);
  return true;
}

SimSnapshot MujocoBackend::snapshot() const {
  const mjModel* m = sim_.model.get();
  const mjData* d = data_.get();
  const RobotBinding& b = asset_->binding;
  SimSnapshot s;
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    const auto& l = b.pitch[g][0];
    const auto& r = b.pitch[g][1];
    s.q_left[g] = l.sign * d->qpos[l.qpos];
    s.q_right[g] = r.sign * d->qpos[r.qpos];
    s.q_dot_left[g] = l.sign * d->qvel[l.dof];
    s.q_dot_right[g] = r.sign * d->qvel[r.dof];
  }
  // The IMU is mounted with a fixed rotation offset relative to the trunk.
  const Mat3 reported = site_rotation(d, b.imu_site) * sim_.imu_offset;
  const Vec3 rpy = matrix_to_rpy(reported);
  mjtNum vel[6];
  mj_objectVelocity(m, d, mjOBJ_SITE, b.imu_site, vel, 1);
  const Vec3 omega = sim_.imu_offset.transpose() * Vec3(vel[0], vel[1], vel[2]);
  for (int i = 0; i < 3; ++i) {
    s.trunk_rpy[i] = rpy[i];
    s.trunk_rpy_rate[i] = omega[i];
  }
  s.head_height_raw = head_height_above_feet(d, b);
  s.self_collision_count = self_collisions();
  s.sim_time = d->time - t0_;
  return s;
}

}  // namespace getup
