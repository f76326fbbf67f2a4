#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "../support/fixtures.hpp"
#include "getup/core/error.hpp"
#include "getup/env/env.hpp"
#include "getup/rand/randomization.hpp"

namespace getup {
namespace {

using testing::asset;

double body_mass_sum(const mjModel* m) {
  double s = 0.0;
  for (int b = 0; b < m->nbody; ++b) s += m->body_mass[b];
  return s;
}

std::vector<double> arr(const mjtNum* p, int n) { return {p, p + n}; }

TEST(Sample, TenThousandDrawsStayInBoundsAndCenter) {
  const RandomizationConfig cfg;
  Rng rng(7);
  const int n = 10000;
  double sums[8] = {};
  for (int i = 0; i < n; ++i) {
    const auto s = sample_randomization(rng, cfg);
    ASSERT_TRUE(cfg.contains(s)) << s.to_string();
    const double v[8] = {s.mass_scale,          s.com_offset_scale,        s.friction_scale_ground,
                         s.friction_scale_actuator, s.gain_scale,          s.imu_offset_rpy_deg[0],
                         s.imu_offset_rpy_deg[1], s.imu_offset_rpy_deg[2]};
    for (int k = 0; k < 8; ++k) sums[k] += v[k];
  }
  const Range ranges[8] = {cfg.mass, cfg.com_offset, cfg.friction_ground, cfg.friction_actuator,
                           cfg.gain, cfg.imu_offset_deg, cfg.imu_offset_deg, cfg.imu_offset_deg};
  for (int k = 0; k < 8; ++k) {
    const double mid = 0.5 * (ranges[k].lo + ranges[k].hi);
    EXPECT_NEAR(sums[k] / n, mid, 0.01 * ranges[k].width()) << "field " << k;
  }
}

TEST(Sample, DefaultBoundsAreThePublishedOnes) {
  const RandomizationConfig c;
  EXPECT_EQ(c.mass, (Range{0.9, 1.1}));
  EXPECT_EQ(c.com_offset, (Range{0.9, 1.1}));
  EXPECT_EQ(c.friction_ground, (Range{0.85, 1.15}));
  EXPECT_EQ(c.friction_actuator, (Range{0.85, 1.15}));
  EXPECT_EQ(c.gain, (Range{0.9, 1.1}));
  EXPECT_EQ(c.imu_offset_deg, (Range{-3.0, 3.0}));
}

TEST(Sample, CollapsedRangesGiveIdentity) {
  Rng rng(1);
  EXPECT_EQ(sample_randomization(rng, RandomizationConfig::disabled()), RandomizationSample::identity());
}

TEST(Sample, SameSeedSameSample) {
  Rng a(99), b(99);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_randomization(a, {}), sample_randomization(b, {}));
}

TEST(Sample, WidenedRangesNeedExplicitFlag) {
  RandomizationConfig c;
  c.mass = {0.5, 1.5};
  EXPECT_THROW(c.validate(), ArgumentError);
  c.allow_widened = true;
  EXPECT_NO_THROW(c.validate());
  c.gain = {1.2, 1.1};
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Apply, IdentityPreservesModel) {
  const mjModel* base = asset("proc_mid")->model.get();
  const double before = body_mass_sum(base);
  const SimModel sm = apply_randomization(base, RandomizationSample::identity());
  const mjModel* m = sm.model.get();
  EXPECT_NEAR(body_mass_sum(m), before, 1e-12 * before);
  EXPECT_EQ(arr(m->body_inertia, 3 * m->nbody), arr(base->body_inertia, 3 * base->nbody));
  EXPECT_EQ(arr(m->body_ipos, 3 * m->nbody), arr(base->body_ipos, 3 * base->nbody));
  EXPECT_EQ(arr(m->geom_friction, 3 * m->ngeom), arr(base->geom_friction, 3 * base->ngeom));
  EXPECT_EQ(arr(m->actuator_gainprm, mjNGAIN * m->nu), arr(base->actuator_gainprm, mjNGAIN * base->nu));
  EXPECT_TRUE(sm.imu_offset.isIdentity(0.0));
}

TEST(Apply, MassScaleMultipliesTotalMass) {
  const mjModel* base = asset("proc_mid")->model.get();
  const double before = body_mass_sum(base);
  RandomizationSample s;
  s.mass_scale = 1.1;
  const SimModel sm = apply_randomization(base, s);
  EXPECT_NEAR(body_mass_sum(sm.model.get()), 1.1 * before, 1e-12 * before);
  EXPECT_NEAR(mj_getTotalmass(sm.model.get()), 1.1 * before, 1e-12 * before);
  EXPECT_DOUBLE_EQ(body_mass_sum(base), before);  // base untouched
}

TEST(Apply, OtherFieldsScaleTheirParameters) {
  const mjModel* base = asset("proc_mid")->model.get();
  RandomizationSample s;
  s.friction_scale_ground = 1.15;
  s.friction_scale_actuator = 0.85;
  s.gain_scale = 0.9;
  s.com_offset_scale = 1.1;
  const SimModel sm = apply_randomization(base, s);
  const mjModel* m = sm.model.get();
  EXPECT_DOUBLE_EQ(m->geom_friction[0], 1.15 * base->geom_friction[0]);
  for (int v = 6; v < m->nv; ++v) EXPECT_DOUBLE_EQ(m->dof_frictionloss[v], 0.85 * base->dof_frictionloss[v]);
  for (int a = 0; a < m->nu; ++a) {
    EXPECT_DOUBLE_EQ(m->actuator_gainprm[a * mjNGAIN], 0.9 * base->actuator_gainprm[a * mjNGAIN]);
    EXPECT_DOUBLE_EQ(m->actuator_biasprm[a * mjNBIAS + 1], 0.9 * base->actuator_biasprm[a * mjNBIAS + 1]);
    EXPECT_DOUBLE_EQ(m->actuator_forcerange[2 * a + 1], 0.9 * base->actuator_forcerange[2 * a + 1]);
  }
  // Every body's CoM moved outward by 10% of a positive extent.
  for (int b = 1; b < m->nbody; ++b) {
    const double shift = std::abs(m->body_ipos[3 * b + 2] - base->body_ipos[3 * b + 2]);
    EXPECT_GT(shift, 0.0) << "body " << b;
  }
}

TEST(Apply, IdentityAfterSampleIsIdempotent) {
  const mjModel* base = asset("proc_small")->model.get();
  Rng rng(3);
  const auto s = sample_randomization(rng, {});
  const SimModel once = apply_randomization(base, s);
  const SimModel twice = apply_randomization(once.model.get(), RandomizationSample::identity());
  const mjModel* a = once.model.get();
  const mjModel* b = twice.model.get();
  EXPECT_EQ(arr(a->body_mass, a->nbody), arr(b->body_mass, b->nbody));
  EXPECT_EQ(arr(a->body_inertia, 3 * a->nbody), arr(b->body_inertia, 3 * b->nbody));
  EXPECT_EQ(arr(a->body_ipos, 3 * a->nbody), arr(b->body_ipos, 3 * b->nbody));
  EXPECT_EQ(arr(a->actuator_gainprm, mjNGAIN * a->nu), arr(b->actuator_gainprm, mjNGAIN * b->nu));
  EXPECT_EQ(arr(a->dof_invweight0, a->nv), arr(b->dof_invweight0, b->nv));
}

TEST(Apply, RandomizedModelKeepsMorphologyInvariants) {
  const auto& a = *asset("proc_mid");
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const SimModel sm = apply_randomization(a.model.get(), sample_randomization(rng, {}));
    const mjModel* m = sm.model.get();
    EXPECT_NO_THROW(bind_robot(m, a.spec));
    EXPECT_EQ(arr(m->jnt_range, 2 * m->njnt), arr(a.model->jnt_range, 2 * m->njnt));
    for (int b = 1; b < m->nbody; ++b) EXPECT_GT(m->body_mass[b], 0.0);
  }
}

TEST(Apply, InvalidSampleRaisesFaultWithSample) {
  RandomizationSample s;
  s.mass_scale = std::numeric_limits<double>::quiet_NaN();
  try {
    apply_randomization(asset("proc_small")->model.get(), s);
    FAIL() << "expected RandomizationFault";
  } catch (const RandomizationFault& f) {
    EXPECT_TRUE(std::isnan(f.sample().mass_scale));
    EXPECT_NE(std::string(f.what()).find("mass_scale"), std::string::npos);
  }
  s.mass_scale = 1.0;
  s.friction_scale_ground = -1.0;
  EXPECT_THROW(apply_randomization(asset("proc_small")->model.get(), s), RandomizationFault);
}

TEST(ImuOffset, StandingRobotReportsTheOffsetPitch) {
  EnvConfig cfg;
  MujocoBackend plain(asset("proc_mid"));
  MujocoBackend offset(asset("proc_mid"));
  RandomizationSample s;
  s.imu_offset_rpy_deg = {0.0, 3.0, 0.0};
  plain.reset_standing(RandomizationSample::identity(), cfg);
  offset.reset_standing(s, cfg);
  const double deg = std::numbers::pi / 180.0;
  EXPECT_NEAR(offset.snapshot().trunk_rpy[1], 3.0 * deg, 1e-9);
  for (int i = 0; i < 20; ++i) {
    plain.advance(cfg);
    offset.advance(cfg);
    EXPECT_NEAR(offset.snapshot().trunk_rpy[1] - plain.snapshot().trunk_rpy[1], 3.0 * deg, 1e-9);
  }
}

TEST(ImuOffset, DoesNotChangeDynamics) {
  EnvConfig cfg;
  cfg.angular_velocity_unit = AngularVelocityUnit::rad_per_s;
  RandomizationSample with;
  with.imu_offset_rpy_deg = {2.5, -3.0, 1.0};
  GetupEnv a(asset("proc_small"), cfg);
  GetupEnv b(asset("proc_small"), cfg);
  a.reset(42, RandomizationSample::identity());
  b.reset(42, with);
  Rng actions(5);
  for (int t = 0; t < 60 && !a.done() && !b.done(); ++t) {
    Vec5 act;
    for (double& x : act) x = uniform(actions, -1.0, 1.0);
    a.step(act);
    b.step(act);
    auto* ma = dynamic_cast<MujocoBackend*>(&a.backend());
    auto* mb = dynamic_cast<MujocoBackend*>(&b.backend());
    ASSERT_EQ(arr(ma->data()->qpos, ma->model()->nq), arr(mb->data()->qpos, mb->model()->nq)) << "step " << t;
  }
}

}  // namespace
}  // namespace getup
