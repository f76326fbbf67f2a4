#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace getup {

// The five pitch groups every morphology exposes to the policy, in
// observation/action order.
enum class JointGroup { shoulder = 0, elbow, hip, knee, ankle };
inline constexpr std::size_t kNumGroups = 5;
inline constexpr std::array<JointGroup, kNumGroups> kAllGroups = {
    JointGroup::shoulder, JointGroup::elbow, JointGroup::hip, JointGroup::knee, JointGroup::ankle};

enum class Side { left = 0, right };
inline constexpr std::array<Side, 2> kSides = {Side::left, Side::right};

std::string_view to_string(JointGroup g);
std::string_view to_string(Side s);
std::optional<JointGroup> parse_group(std::string_view name);
std::optional<Side> parse_side(std::string_view name);

// "{side}_{group}_pitch", the name normalize_model assigns to joints and
// their actuators.
std::string canonical_joint_name(Side side, JointGroup group);

struct JointLimit {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const JointLimit&) const = default;
};

struct GroupActuator {
  Side side = Side::left;
  std::string actuator;
  std::string joint;
  // +1 when a positive canonical angle equals a positive joint angle.
  int sign = 1;
  bool operator==(const GroupActuator&) const = default;
};

struct SiteNames {
  std::string imu = "imu";
  std::string head = "head";
  std::string left_foot = "left_foot";
  std::string right_foot = "right_foot";
  bool operator==(const SiteNames&) const = default;
};

struct MorphologySpec {
  std::string id;
  double height = 0.0;  // m, declared (Table-style metadata)
  int dof = 0;
  double mass = 0.0;  // kg, declared
  std::filesystem::path model_path;
  std::array<std::vector<GroupActuator>, kNumGroups> joint_groups;
  double nominal_head_height = 0.0;  // m, measured in the standing pose
  std::map<std::string, double> initial_pose;
  SiteNames sites;
  std::map<std::string, JointLimit> joint_limits;

  // Measured from the model when loaded; kept alongside the declared
  // values since published heights do not say which one they report.
  double measured_total_height = 0.0;
  double measured_mass = 0.0;

  const std::vector<GroupActuator>& group(JointGroup g) const {
    return joint_groups[static_cast<std::size_t>(g)];
  }
  // Group limit shared by every actuator of the group, in canonical sign.
  JointLimit group_limit(JointGroup g) const;

  // Throws ArgumentError listing every violated invariant.
  void validate() const;
  bool operator==(const MorphologySpec&) const = default;
};

// Partial spec applied on top of what load_morphology infers.
struct MorphologyOverrides {
  std::optional<std::string> id;
  std::optional<double> height;
  std::optional<double> mass;
  // Group -> per-side actuator name (and optional sign).
  struct GroupOverride {
    std::optional<std::string> left;
    std::optional<std::string> right;
    std::optional<int> left_sign;
    std::optional<int> right_sign;
  };
  std::map<JointGroup, GroupOverride> groups;
  std::optional<SiteNames> sites;
  std::optional<std::string> keyframe;
};

// Reads an override file (YAML):
//   id: nugus
//   height: 0.81
//   mass: 6.68
//   keyframe: init
//   sites: {imu: imu, head: head, left_foot: lf, right_foot: rf}
//   groups:
//     hip: {left: l_hip_y, right: r_hip_y, right_sign: -1}
MorphologyOverrides load_overrides(const std::filesystem::path& path);

// Resolves canonical groups, sites, limits and nominal head height from an
// MJCF file. Throws UnresolvableMorphology / ModelPreparationError.
MorphologySpec load_morphology(const std::filesystem::path& model_path,
                               const MorphologyOverrides& overrides = {});

// Same, from MJCF text; model_path is recorded but not read.
MorphologySpec load_morphology_xml(const std::string& xml, const std::filesystem::path& model_path,
                                   const MorphologyOverrides& overrides = {});

}  // namespace getup
