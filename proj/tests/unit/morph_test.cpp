#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <regex>

#include "getup/core/error.hpp"
#include "getup/morph/morphology.hpp"
#include "getup/morph/mujoco_model.hpp"
#include "getup/morph/normalize.hpp"
#include "getup/morph/procedural.hpp"
#include "getup/morph/suite.hpp"

namespace getup {
namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "getup_morph_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string strip_sites(const std::string& xml) {
  return std::regex_replace(xml, std::regex(R"(\s*<site name="[a-z_]+" pos="[^"]*"/>)"), "");
}

ProceduralModel small_robot() { return generate_procedural_humanoid({0.5, 3.0, 0.5}, {"small", 0}); }

TEST(Procedural, HalfMeterRobotHasExpectedHeadHeight) {
  const auto pm = small_robot();
  EXPECT_GE(pm.spec.dof, 10);
  EXPECT_EQ(pm.spec.dof, 14);
  EXPECT_GT(pm.spec.nominal_head_height, 0.4);
  EXPECT_LT(pm.spec.nominal_head_height, 0.5);
  EXPECT_NEAR(pm.spec.measured_mass, 3.0, 1e-9);
  EXPECT_NO_THROW(pm.spec.validate());
}

TEST(Procedural, Deterministic) {
  EXPECT_EQ(small_robot().xml, small_robot().xml);
}

TEST(Procedural, RejectsOutOfRangeScale) {
  EXPECT_THROW(generate_procedural_humanoid({2.0, 3.0, 0.5}), ArgumentError);
  EXPECT_THROW(generate_procedural_humanoid({0.5, 0.0, 0.5}), ArgumentError);
  EXPECT_THROW(generate_procedural_humanoid({0.5, 3.0, 0.9}), ArgumentError);
}

TEST(Procedural, HeightIsStrictlyMonotone) {
  double last = 0.0;
  for (double h = 0.3; h <= 1.2 + 1e-9; h += 0.1) {
    const auto pm = generate_procedural_humanoid({h, 2.0 + 4.0 * h, 0.5});
    EXPECT_GT(pm.spec.measured_total_height, last) << h;
    EXPECT_GT(pm.spec.nominal_head_height, 0.0);
    last = pm.spec.measured_total_height;
  }
}

TEST(Procedural, ExtraDofVariants) {
  for (int extra : {0, 2, 4, 6}) {
    const auto pm = generate_procedural_humanoid({0.6, 4.0, 0.5}, {"x", extra});
    EXPECT_EQ(pm.spec.dof, 14 + extra);
  }
}

TEST(LoadMorphology, ReadsWrittenFileAndResolvesGroups) {
  const auto pm = small_robot();
  const auto path = scratch("small.xml");
  write_procedural_model(pm, path);
  const MorphologySpec spec = load_morphology(path);
  EXPECT_EQ(spec.id, "small");
  for (JointGroup g : kAllGroups) {
    ASSERT_EQ(spec.group(g).size(), 2u);
    EXPECT_EQ(spec.group(g)[0].actuator, canonical_joint_name(Side::left, g));
    EXPECT_EQ(spec.group(g)[0].sign, 1);
  }
  EXPECT_EQ(spec.initial_pose.at("left_knee_pitch"), 0.3);
  EXPECT_NEAR(spec.nominal_head_height, pm.spec.nominal_head_height, 1e-12);
}

TEST(LoadMorphology, NonconformingHipNamesWithoutOverrideAreUnresolvable) {
  std::string xml = replace_all(small_robot().xml, "left_hip_pitch", "LHipY");
  xml = replace_all(xml, "right_hip_pitch", "RHipY");
  EXPECT_THROW(load_morphology_xml(xml, "odd.xml"), UnresolvableMorphology);

  MorphologyOverrides ov;
  ov.groups[JointGroup::hip].left = "LHipY";
  ov.groups[JointGroup::hip].right = "RHipY";
  const MorphologySpec spec = load_morphology_xml(xml, "odd.xml", ov);
  EXPECT_EQ(spec.group(JointGroup::hip)[1].actuator, "RHipY");
}

TEST(LoadMorphology, MissingSitesAskForPreparation) {
  const std::string xml = strip_sites(small_robot().xml);
  try {
    load_morphology_xml(xml, "nosites.xml");
    FAIL() << "expected ModelPreparationError";
  } catch (const ModelPreparationError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
}

TEST(LoadMorphology, MissingFile) {
  EXPECT_THROW(load_morphology(scratch("does_not_exist.xml")), ModelPreparationError);
}

TEST(LoadMorphology, OverrideFile) {
  const auto pm = small_robot();
  const auto model = scratch("ov_model.xml");
  write_procedural_model(pm, model);
  const auto ov_path = scratch("ov.yaml");
  write_text_file(ov_path, "id: renamed\nheight: 0.52\nmass: 3.1\ngroups:\n  knee: {left_sign: 1, right_sign: 1}\n");
  const MorphologySpec spec = load_morphology(model, load_overrides(ov_path));
  EXPECT_EQ(spec.id, "renamed");
  EXPECT_DOUBLE_EQ(spec.height, 0.52);
  EXPECT_DOUBLE_EQ(spec.mass, 3.1);
}

TEST(Normalize, CanonicalModelIsUnchanged) {
  const auto pm = small_robot();
  const NormalizedModel out = normalize_model(pm.xml, "small");
  EXPECT_TRUE(out.report.fixes.empty());
  EXPECT_TRUE(out.report.clean());
  EXPECT_EQ(out.xml, pm.xml);
}

TEST(Normalize, RollElbowsAreReorientedToPitch) {
  std::string xml = replace_all(small_robot().xml, R"(name="left_elbow_pitch" axis="0 1 0")",
                                R"(name="left_elbow_pitch" axis="1 0 0")");
  xml = replace_all(xml, R"(name="right_elbow_pitch" axis="0 1 0")", R"(name="right_elbow_pitch" axis="1 0 0")");
  const NormalizedModel out = normalize_model(xml, "rollelbow");
  ASSERT_TRUE(out.report.clean());
  int reoriented = 0;
  for (const auto& f : out.report.fixes) reoriented += f.find("reoriented") != std::string::npos;
  EXPECT_EQ(reoriented, 2);

  ModelPtr m = compile_mjcf(out.xml);
  const int j = mj_name2id(m.get(), mjOBJ_JOINT, "left_elbow_pitch");
  EXPECT_NEAR(std::abs(m->jnt_axis[3 * j + 1]), 1.0, 1e-9);
}

TEST(Normalize, RenamesJointsAndAddsSites) {
  std::string xml = strip_sites(small_robot().xml);
  for (JointGroup g : kAllGroups) {
    const std::string grp(to_string(g));
    xml = replace_all(xml, "\"left_" + grp + "_pitch\"", "\"l_" + grp + "_pitch\"");
    xml = replace_all(xml, "\"right_" + grp + "_pitch\"", "\"R" + std::string(1, char(std::toupper(grp[0]))) +
                                                              grp.substr(1) + "Pitch\"");
  }
  const NormalizedModel out = normalize_model(xml, "messy");
  ASSERT_TRUE(out.report.clean()) << out.report.to_json();
  const MorphologySpec spec = load_morphology_xml(out.xml, "messy.xml");
  EXPECT_EQ(spec.group(JointGroup::knee)[1].actuator, "right_knee_pitch");
  EXPECT_GT(spec.nominal_head_height, 0.4);

  // Re-normalizing the output changes nothing and re-loads identically.
  const NormalizedModel again = normalize_model(out.xml, "messy");
  EXPECT_TRUE(again.report.fixes.empty());
  EXPECT_EQ(load_morphology_xml(again.xml, "messy.xml"), spec);
}

TEST(Normalize, MissingElbowIsUnresolvedNotThrown) {
  std::string xml = replace_all(small_robot().xml, "left_elbow_pitch", "left_wrist");
  xml = replace_all(xml, "right_elbow_pitch", "right_wrist");
  NormalizedModel out;
  ASSERT_NO_THROW(out = normalize_model(xml, "noelbow"));
  EXPECT_FALSE(out.report.clean());
}

TEST(Normalize, TopplingInitialPoseIsStabilized) {
  // Lean the trunk far forward at the hips; the robot falls over on its face.
  const auto pm = small_robot();
  MorphologySpec spec = pm.spec;
  ModelPtr m = compile_mjcf(pm.xml);
  std::string xml = pm.xml;
  const std::string key_prefix = R"(<key name="init" qpos=")";
  const auto pos = xml.find(key_prefix);
  ASSERT_NE(pos, std::string::npos);
  const auto end = xml.find('"', pos + key_prefix.size());
  std::vector<double> q(m->key_qpos, m->key_qpos + m->nq);
  for (Side s : kSides) {
    q[m->jnt_qposadr[mj_name2id(m.get(), mjOBJ_JOINT, canonical_joint_name(s, JointGroup::hip).c_str())]] = -0.45;
  }
  std::string qs;
  for (double v : q) qs += (qs.empty() ? "" : " ") + std::to_string(v);
  xml.replace(pos + key_prefix.size(), end - pos - key_prefix.size(), qs);

  const MorphologySpec leaning = load_morphology_xml(xml, "lean.xml");
  ModelPtr lm = compile_mjcf(xml);
  const double before = standing_pitch_excursion(lm.get(), bind_robot(lm.get(), leaning), 2.0);
  ASSERT_GT(before, 0.2617993877991494) << "fixture should topple";

  const NormalizedModel out = normalize_model(xml, "lean");
  ASSERT_TRUE(out.report.clean()) << out.report.to_json();
  ASSERT_FALSE(out.report.fixes.empty());
  EXPECT_NE(out.report.fixes.back().find("adjusted initial hip pitch"), std::string::npos);

  const MorphologySpec fixed = load_morphology_xml(out.xml, "lean.xml");
  ModelPtr fm = compile_mjcf(out.xml);
  EXPECT_LE(standing_pitch_excursion(fm.get(), bind_robot(fm.get(), fixed), 2.0), 0.2617993877991494);
}

TEST(Normalize, WritesBesideOriginal) {
  const auto path = scratch("beside.xml");
  write_text_file(path, small_robot().xml);
  const auto report = normalize_model_file(path);
  EXPECT_TRUE(report.clean());
  EXPECT_TRUE(std::filesystem::exists(scratch("beside.normalized.xml")));
  EXPECT_TRUE(std::filesystem::exists(scratch("beside.normalization.json")));
}

TEST(Suite, BuiltinKidSizeSuiteMatchesDeclaredMetadata) {
  const auto reg = MorphologyRegistry::builtin();
  const auto specs = reg.materialize({"bez1", "op3_rot", "bez2", "bez3", "sigmaban", "wolfgang", "nugus"},
                                     scratch("models"));
  const SuiteValidation v = validate_suite(specs);
  for (const auto& c : v.checks) EXPECT_TRUE(c.pass) << c.id << ": " << c.message;

  const auto& nugus = specs.back();
  EXPECT_EQ(nugus.id, "nugus");
  EXPECT_DOUBLE_EQ(nugus.height, 0.81);
  EXPECT_EQ(nugus.dof, 20);
  EXPECT_DOUBLE_EQ(nugus.mass, 6.68);
  const auto& bez1 = specs.front();
  EXPECT_DOUBLE_EQ(bez1.height, 0.48);
  EXPECT_EQ(bez1.dof, 18);
  EXPECT_DOUBLE_EQ(bez1.mass, 2.82);
}

TEST(Suite, MassMismatchFails) {
  auto spec = write_procedural_model(small_robot(), scratch("mismatch.xml"));
  spec.mass = 10.0;
  const SuiteValidation v = validate_suite({spec});
  ASSERT_EQ(v.checks.size(), 1u);
  EXPECT_FALSE(v.checks[0].pass);
}

TEST(Suite, EmptyIsAnArgumentError) { EXPECT_THROW(validate_suite({}), ArgumentError); }

TEST(Suite, UnknownIdListsRegistered) {
  try {
    MorphologyRegistry::builtin().materialize("asimo", scratch("models"));
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("wolfgang"), std::string::npos);
  }
}

// Every registered morphology stands still in its initial pose.
TEST(Suite, RegisteredMorphologiesAreStaticallyStable) {
  const auto reg = MorphologyRegistry::builtin();
  for (const auto& id : reg.ids()) {
    const MorphologySpec spec = reg.materialize(id, scratch("models"));
    ModelPtr m = compile_mjcf(read_text_file(spec.model_path));
    EXPECT_LE(standing_pitch_excursion(m.get(), bind_robot(m.get(), spec), 2.0), 0.2617993877991494) << id;
  }
}

}  // namespace
}  // namespace getup
