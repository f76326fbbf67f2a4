#include "getup/rand/randomization.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "getup/core/error.hpp"

namespace getup {

std::string RandomizationSample::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "mass_scale=" << mass_scale << " com_offset_scale=" << com_offset_scale
     << " friction_scale_ground=" << friction_scale_ground << " friction_scale_actuator=" << friction_scale_actuator
     << " gain_scale=" << gain_scale << " imu_offset_rpy_deg=(" << imu_offset_rpy_deg[0] << ", "
     << imu_offset_rpy_deg[1] << ", " << imu_offset_rpy_deg[2] << ")";
  return os.str();
}

RandomizationConfig RandomizationConfig::disabled() {
  RandomizationConfig c;
  c.mass = c.com_offset = c.friction_ground = c.friction_actuator = c.gain = {1.0, 1.0};
  c.imu_offset_deg = {0.0, 0.0};
  return c;
}

namespace {

bool inside(Range r, double v) { return v >= r.lo && v <= r.hi; }

void check_range(const char* name, Range r, Range limit, bool allow_widened, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ArgumentError(std::string("randomization range ") + name + " is inverted or non-finite");
  }
  if (positive && r.lo <= 0.0) throw ArgumentError(std::string("randomization range ") + name + " must be positive");
  if (!allow_widened && (r.lo < limit.lo - 1e-12 || r.hi > limit.hi + 1e-12)) {
    throw ArgumentError(std::string("randomization range ") + name +
                        " exceeds the default bounds; set allow_widened to use it");
  }
}

}  // namespace

void RandomizationConfig::validate() const {
  const RandomizationConfig d;
  check_range("mass", mass, d.mass, allow_widened, true);
  check_range("com_offset", com_offset, d.com_offset, allow_widened, true);
  check_range("friction_ground", friction_ground, d.friction_ground, allow_widened, true);
  check_range("friction_actuator", friction_actuator, d.friction_actuator, allow_widened, true);
  check_range("gain", gain, d.gain, allow_widened, true);
  check_range("imu_offset_deg", imu_offset_deg, d.imu_offset_deg, allow_widened, false);
}

bool RandomizationConfig::contains(const RandomizationSample& s) const {
  return inside(mass, s.mass_scale) && inside(com_offset, s.com_offset_scale) &&
         inside(friction_ground, s.friction_scale_ground) && inside(friction_actuator, s.friction_scale_actuator) &&
         inside(gain, s.gain_scale) && inside(imu_offset_deg, s.imu_offset_rpy_deg[0]) &&
         inside(imu_offset_deg, s.imu_offset_rpy_deg[1]) && inside(imu_offset_deg, s.imu_offset_rpy_deg[2]);
}

RandomizationSample sample_randomization(Rng& rng, const RandomizationConfig& c) {
  RandomizationSample s;
  s.mass_scale = uniform(rng, c.mass.lo, c.mass.hi);
  s.com_offset_scale = uniform(rng, c.com_offset.lo, c.com_offset.hi);
  s.friction_scale_ground = uniform(rng, c.friction_ground.lo, c.friction_ground.hi);
  s.friction_scale_actuator = uniform(rng, c.friction_actuator.lo, c.friction_actuator.hi);
  s.gain_scale = uniform(rng, c.gain.lo, c.gain.hi);
  for (double& a : s.imu_offset_rpy_deg) a = uniform(rng, c.imu_offset_deg.lo, c.imu_offset_deg.hi);
  return s;
}

namespace {

// Per-axis half extent of a body's geoms in its own frame.
Vec3 body_extent(const mjModel* m, int body) {
  Vec3 e = Vec3::Zero();
  for (int g = m->body_geomadr[body]; g < m->body_geomadr[body] + m->body_geomnum[body]; ++g) {
    for (int k = 0; k < 3; ++k) e[k] = std::max(e[k], std::abs(m->geom_pos[3 * g + k]) + m->geom_rbound[g]);
  }
  return e;
}

bool all_finite(const mjtNum* v, int n) {
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

}  // namespace

SimModel apply_randomization(const mjModel* base, const RandomizationSample& s) {
  SimModel out;
  out.sample = s;
  out.model = copy_model(base);
  mjModel* m = out.model.get();

  const double com_shift = s.com_offset_scale - 1.0;
  for (int b = 1; b < m->nbody; ++b) {
    m->body_mass[b] *= s.mass_scale;
    for (int k = 0; k < 3; ++k) m->body_inertia[3 * b + k] *= s.mass_scale;
    if (com_shift != 0.0) {
      const Vec3 e = body_extent(base, b);
      for (int k = 0; k < 3; ++k) m->body_ipos[3 * b + k] += com_shift * e[k];
    }
  }
  for (int g = 0; g < m->ngeom; ++g) m->geom_friction[3 * g] *= s.friction_scale_ground;
  for (int v = 0; v < m->nv; ++v) m->dof_frictionloss[v] *= s.friction_scale_actuator;
  for (int a = 0; a < m->nu; ++a) {
    m->actuator_gainprm[a * mjNGAIN] *= s.gain_scale;
    m->actuator_biasprm[a * mjNBIAS + 1] *= s.gain_scale;
    m->actuator_biasprm[a * mjNBIAS + 2] *= s.gain_scale;
    m->actuator_forcerange[2 * a] *= s.gain_scale;
    m->actuator_forcerange[2 * a + 1] *= s.gain_scale;
  }

  constexpr double kDeg = std::numbers::pi / 180.0;
  out.imu_offset = rpy_to_matrix(
      Vec3(s.imu_offset_rpy_deg[0] * kDeg, s.imu_offset_rpy_deg[1] * kDeg, s.imu_offset_rpy_deg[2] * kDeg));

  bool ok = all_finite(m->body_mass, m->nbody) && all_finite(m->body_inertia, 3 * m->nbody) &&
            all_finite(m->body_ipos, 3 * m->nbody) && all_finite(m->geom_friction, 3 * m->ngeom) &&
            all_finite(m->actuator_gainprm, mjNGAIN * m->nu) && all_finite(m->actuator_biasprm, mjNBIAS * m->nu);
  for (int b = 1; b < m->nbody && ok; ++b) ok = m->body_mass[b] >= 0.0;
  for (int g = 0; g < m->ngeom && ok; ++g) ok = m->geom_friction[3 * g] > 0.0;
  if (!ok) throw RandomizationFault("randomized model failed validation", s);

  DataPtr d = make_data(m);
  mj_setConst(m, d.get());
  return out;
}

}  // namespace getup
