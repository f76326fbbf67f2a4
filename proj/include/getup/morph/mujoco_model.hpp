#pragma once

#include <mujoco/mujoco.h>

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "getup/morph/morphology.hpp"

namespace getup {

struct MjModelDeleter {
  void operator()(mjModel* m) const { mj_deleteModel(m); }
};
struct MjDataDeleter {
  void operator()(mjData* d) const { mj_deleteData(d); }
};
struct MjSpecDeleter {
  void operator()(mjSpec* s) const { mj_deleteSpec(s); }
};
using ModelPtr = std::unique_ptr<mjModel, MjModelDeleter>;
using DataPtr = std::unique_ptr<mjData, MjDataDeleter>;
using SpecPtr = std::unique_ptr<mjSpec, MjSpecDeleter>;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Both throw ModelPreparationError with MuJoCo's message.
SpecPtr parse_mjcf(const std::string& xml);
ModelPtr compile_spec(mjSpec* spec);
ModelPtr compile_mjcf(const std::string& xml);
std::string save_mjcf(mjSpec* spec);
ModelPtr copy_model(const mjModel* m);
DataPtr make_data(const mjModel* m);

std::string object_name(const mjModel* m, mjtObj type, int id);

// Joint name, or "joint<id>" for unnamed joints.
std::string joint_key(const mjModel* m, int j);

// Index of the free joint carrying the floating base, or -1.
int free_joint(const mjModel* m);

// Extremal world z over all geoms attached to non-world bodies at the
// current kinematic state (mj_kinematics must have run).
double lowest_robot_point(const mjModel* m, const mjData* d);
double highest_robot_point(const mjModel* m, const mjData* d);

// Resolved model indices for one morphology.
struct RobotBinding {
  struct Channel {
    int actuator = -1;
    int joint = -1;
    int qpos = -1;
    int dof = -1;
    int sign = 1;
  };
  // [group][side]
  std::array<std::array<Channel, 2>, kNumGroups> pitch{};
  // Actuators held at their initial-pose target.
  struct Hold {
    int actuator = -1;
    double target = 0.0;
  };
  std::vector<Hold> holds;
  int free_qpos = -1;
  int free_dof = -1;
  int trunk_body = -1;
  int imu_site = -1;
  int head_site = -1;
  int left_foot_site = -1;
  int right_foot_site = -1;
  std::vector<double> initial_qpos;  // full qpos of the standing pose, base at origin
};

RobotBinding bind_robot(const mjModel* m, const MorphologySpec& spec);

// Puts the robot in its standing pose with the lowest point at `clearance`
// above z = 0 and zero velocity; runs mj_forward.
void place_standing(const mjModel* m, mjData* d, const RobotBinding& b, double clearance = 0.0);

// Servo targets reproducing the initial pose.
void hold_initial_pose(const mjModel* m, mjData* d, const RobotBinding& b);

// Head site height above the mean foot-site height (signed).
double head_height_above_feet(const mjData* d, const RobotBinding& b);

// Trunk orientation as a rotation matrix from the IMU site frame.
std::array<double, 9> imu_rotation(const mjData* d, const RobotBinding& b);

// Largest |trunk pitch| (rad) seen while holding the initial pose standing
// on flat ground for `seconds` under zero action.
double standing_pitch_excursion(const mjModel* m, const RobotBinding& b, double seconds);

}  // namespace getup
