#include "getup/morph/procedural.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

#include "getup/core/error.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << (std::abs(v) < 1e-12 ? 0.0 : v);
  return os.str();
}

std::string vec(std::initializer_list<double> vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += ' ';
    out += num(v);
  }
  return out;
}

struct Joint {
  std::string name;
  double init = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double torque = 0.0;
};

class Builder {
 public:
  Builder(const ProceduralScale& s, const ProceduralOptions& o) : s_(s), o_(o) {
    const double H = s.height;
    leg_ = s.limb_ratio * H;
    ankle_h_ = 0.05 * H;
    thigh_ = shank_ = 0.5 * (leg_ - ankle_h_);
    head_r_ = 0.06 * H;
    neck_ = 0.02 * H;
    torso_ = H - leg_ - neck_ - 2.0 * head_r_;
    hip_y_ = 0.055 * H;
    torso_hw_ = 0.09 * H;
    torso_hd_ = 0.055 * H;
    shoulder_y_ = torso_hw_ + 0.03 * H;
    upper_arm_ = 0.2 * H;
    forearm_ = 0.2 * H;
    const double g = 9.81;
    leg_torque_ = 0.35 * s.mass * g * H;
    arm_torque_ = 0.25 * s.mass * g * H;
    aux_torque_ = 0.2 * s.mass * g * H;
  }

  std::string build() {
    std::ostringstream x;
    const double H = s_.height;
    const double M = s_.mass;
    x << "<mujoco model=\"" << o_.id << "\">\n";
    x << "  <compiler angle=\"radian\" autolimits=\"true\"/>\n";
    x << "  <option timestep=\"0.005\" integrator=\"implicitfast\"/>\n";
    x << "  <default>\n";
    x << "    <joint armature=\"" << num(0.02 * M * H * H) << "\" damping=\"" << num(0.02 * leg_torque_)
      << "\" frictionloss=\"" << num(0.01 * leg_torque_) << "\"/>\n";
    x << "    <geom condim=\"3\" friction=\"1 0.005 0.0001\" rgba=\"0.6 0.6 0.7 1\"/>\n";
    x << "    <site size=\"" << num(0.01 * H) << "\"/>\n";
    x << "  </default>\n";
    x << "  <worldbody>\n";
    x << "    <geom name=\"floor\" type=\"plane\" size=\"0 0 0.05\" rgba=\"0.8 0.8 0.8 1\"/>\n";
    x << "    <body name=\"trunk\" pos=\"0 0 " << num(leg_) << "\">\n";
    x << "      <freejoint name=\"root\"/>\n";
    x << "      <site name=\"imu\" pos=\"0 0 0\"/>\n";
    x << "      <geom name=\"torso\" type=\"box\" pos=\"0 0 " << num(0.5 * torso_) << "\" size=\""
      << vec({torso_hd_, torso_hw_, 0.5 * torso_}) << "\" mass=\"" << num(frac_trunk() * M) << "\"/>\n";
    head(x);
    for (Side side : kSides) arm(x, side);
    for (Side side : kSides) leg(x, side);
    x << "    </body>\n";
    x << "  </worldbody>\n";
    x << "  <actuator>\n";
    for (const Joint& j : joints_) {
      const double kp = j.torque / 0.2;
      x << "    <position name=\"" << j.name << "\" joint=\"" << j.name << "\" kp=\"" << num(kp) << "\" kv=\""
        << num(0.05 * kp) << "\" ctrlrange=\"" << vec({j.lo, j.hi}) << "\" forcerange=\""
        << vec({-j.torque, j.torque}) << "\"/>\n";
    }
    x << "  </actuator>\n";
    x << "  <keyframe>\n";
    x << "    <key name=\"init\" qpos=\"0 0 " << num(leg_) << " 1 0 0 0";
    for (const Joint& j : joints_) x << ' ' << num(j.init);
    x << "\"/>\n";
    x << "  </keyframe>\n";
    x << "</mujoco>\n";
    return x.str();
  }

 private:
  static constexpr double kHead = 0.07, kThigh = 0.075, kShank = 0.05, kFoot = 0.025, kUpperArm = 0.035,
                          kForearm = 0.025;
  double frac_trunk() const { return 1.0 - kHead - 2.0 * (kThigh + kShank + kFoot + kUpperArm + kForearm); }

  void joint(std::ostream& x, const std::string& indent, const std::string& name, const char* axis, double lo,
             double hi, double init, double torque) {
    x << indent << "<joint name=\"" << name << "\" axis=\"" << axis << "\" range=\"" << vec({lo, hi}) << "\"/>\n";
    joints_.push_back({name, init, lo, hi, torque});
  }

  void head(std::ostream& x) {
    const double H = s_.height;
    x << "      <body name=\"head\" pos=\"0 0 " << num(torso_ + neck_) << "\">\n";
    if (o_.extra_dof >= 6) {
      joint(x, "        ", "head_yaw", "0 0 1", -1.5, 1.5, 0.0, aux_torque_);
      joint(x, "        ", "head_pitch", "0 1 0", -0.8, 0.8, 0.0, aux_torque_);
    }
    x << "        <geom name=\"head\" type=\"sphere\" pos=\"0 0 " << num(head_r_) << "\" size=\"" << num(head_r_)
      << "\" mass=\"" << num(kHead * s_.mass) << "\"/>\n";
    x << "        <site name=\"head\" pos=\"0 0 " << num(head_r_) << "\"/>\n";
    x << "      </body>\n";
    (void)H;
  }

  void arm(std::ostream& x, Side side) {
    const double H = s_.height;
    const double M = s_.mass;
    const std::string sd(to_string(side));
    const double y = side == Side::left ? shoulder_y_ : -shoulder_y_;
    const double r = 0.02 * H;
    x << "      <body name=\"" << sd << "_upper_arm\" pos=\"" << vec({0.0, y, torso_ - 0.02 * H}) << "\">\n";
    joint(x, "        ", sd + "_shoulder_pitch", "0 1 0", -3.0, 2.0, 0.0, arm_torque_);
    if (o_.extra_dof >= 2) {
      const bool left = side == Side::left;
      joint(x, "        ", sd + "_shoulder_roll", "1 0 0", left ? -0.2 : -1.6, left ? 1.6 : 0.2, 0.0, arm_torque_);
    }
    x << "        <geom name=\"" << sd << "_upper_arm\" type=\"capsule\" fromto=\""
      << vec({0.0, 0.0, 0.0, 0.0, 0.0, -upper_arm_}) << "\" size=\"" << num(r) << "\" mass=\""
      << num(kUpperArm * M) << "\"/>\n";
    x << "        <body name=\"" << sd << "_forearm\" pos=\"0 0 " << num(-upper_arm_) << "\">\n";
    joint(x, "          ", sd + "_elbow_pitch", "0 1 0", -2.4, 0.1, -0.3, arm_torque_);
    x << "          <geom name=\"" << sd << "_forearm\" type=\"capsule\" fromto=\""
      << vec({0.0, 0.0, 0.0, 0.0, 0.0, -forearm_}) << "\" size=\"" << num(0.9 * r) << "\" mass=\""
      << num(kForearm * M) << "\"/>\n";
    x << "        </body>\n";
    x << "      </body>\n";
  }

  void leg(std::ostream& x, Side side) {
    const double H = s_.height;
    const double M = s_.mass;
    const std::string sd(to_string(side));
    const bool left = side == Side::left;
    const double y = left ? hip_y_ : -hip_y_;
    x << "      <body name=\"" << sd << "_thigh\" pos=\"" << vec({0.0, y, 0.0}) << "\">\n";
    if (o_.extra_dof >= 4) joint(x, "        ", sd + "_hip_yaw", "0 0 1", -0.8, 0.8, 0.0, aux_torque_);
    joint(x, "        ", sd + "_hip_roll", "1 0 0", left ? -0.3 : -0.6, left ? 0.6 : 0.3, 0.0, leg_torque_);
    joint(x, "        ", sd + "_hip_pitch", "0 1 0", -2.4, 0.6, -0.15, leg_torque_);
    x << "        <geom name=\"" << sd << "_thigh\" type=\"capsule\" fromto=\""
      << vec({0.0, 0.0, 0.0, 0.0, 0.0, -thigh_}) << "\" size=\"" << num(0.035 * H) << "\" mass=\""
      << num(kThigh * M) << "\"/>\n";
    x << "        <body name=\"" << sd << "_shank\" pos=\"0 0 " << num(-thigh_) << "\">\n";
    joint(x, "          ", sd + "_knee_pitch", "0 1 0", -0.05, 2.5, 0.3, leg_torque_);
    x << "          <geom name=\"" << sd << "_shank\" type=\"capsule\" fromto=\""
      << vec({0.0, 0.0, 0.0, 0.0, 0.0, -shank_}) << "\" size=\"" << num(0.03 * H) << "\" mass=\""
      << num(kShank * M) << "\"/>\n";
    x << "          <body name=\"" << sd << "_foot\" pos=\"0 0 " << num(-shank_) << "\">\n";
    joint(x, "            ", sd + "_ankle_pitch", "0 1 0", -1.2, 1.2, -0.15, leg_torque_);
    joint(x, "            ", sd + "_ankle_roll", "1 0 0", -0.4, 0.4, 0.0, leg_torque_);
    const double hz = 0.012 * H;
    x << "            <geom name=\"" << sd << "_foot\" type=\"box\" pos=\""
      << vec({0.02 * H, 0.0, -ankle_h_ + hz}) << "\" size=\"" << vec({0.11 * H, 0.04 * H, hz}) << "\" mass=\""
      << num(kFoot * M) << "\"/>\n";
    x << "            <site name=\"" << sd << "_foot\" pos=\"" << vec({0.0, 0.0, -ankle_h_}) << "\"/>\n";
    x << "          </body>\n";
    x << "        </body>\n";
    x << "      </body>\n";
  }

  ProceduralScale s_;
  ProceduralOptions o_;
  double leg_, ankle_h_, thigh_, shank_, head_r_, neck_, torso_, hip_y_, torso_hw_, torso_hd_, shoulder_y_,
      upper_arm_, forearm_, leg_torque_, arm_torque_, aux_torque_;
  std::vector<Joint> joints_;
};

}  // namespace

ProceduralModel generate_procedural_humanoid(const ProceduralScale& scale, const ProceduralOptions& options) {
  if (!(scale.height >= 0.3 && scale.height <= 1.2)) {
    throw ArgumentError("procedural height must lie in [0.3, 1.2] m, got " + num(scale.height));
  }
  if (!(scale.mass > 0.0)) throw ArgumentError("procedural mass must be positive");
  if (!(scale.limb_ratio >= 0.2 && scale.limb_ratio <= 0.8)) {
    throw ArgumentError("procedural limb_ratio must lie in [0.2, 0.8], got " + num(scale.limb_ratio));
  }
  if (options.extra_dof != 0 && options.extra_dof != 2 && options.extra_dof != 4 && options.extra_dof != 6) {
    throw ArgumentError("procedural extra_dof must be 0, 2, 4 or 6");
  }
  ProceduralModel out;
  out.xml = Builder(scale, options).build();
  MorphologyOverrides ov;
  ov.id = options.id;
  out.spec = load_morphology_xml(out.xml, {}, ov);
  return out;
}

MorphologySpec write_procedural_model(const ProceduralModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_text_file(path, model.xml);
  MorphologySpec spec = model.spec;
  spec.model_path = path;
  return spec;
}

}  // namespace getup
