#include "getup/morph/suite.hpp"

#include <cmath>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

bool SuiteValidation::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

SuiteValidation validate_suite(const std::vector<MorphologySpec>& specs, double tolerance) {
  if (specs.empty()) throw ArgumentError("validate_suite needs at least one morphology");
  SuiteValidation out;
  for (const MorphologySpec& spec : specs) {
    SuiteCheck c;
    c.id = spec.id;
    c.declared_height = spec.height;
    c.declared_mass = spec.mass;
    try {
      MorphologyOverrides ov;
      ov.id = spec.id;
      ov.sites = spec.sites;
      for (JointGroup g : kAllGroups) {
        for (const auto& ga : spec.group(g)) {
          auto& go = ov.groups[g];
          (ga.side == Side::left ? go.left : go.right) = ga.actuator;
          (ga.side == Side::left ? go.left_sign : go.right_sign) = ga.sign;
        }
      }
      const MorphologySpec measured = load_morphology(spec.model_path, ov);
      c.measured_height = measured.measured_total_height;
      c.measured_mass = measured.measured_mass;
      const double dh = std::abs(c.measured_height - c.declared_height) / c.declared_height;
      const double dm = std::abs(c.measured_mass - c.declared_mass) / c.declared_mass;
      c.pass = dh <= tolerance && dm <= tolerance;
      std::ostringstream msg;
      msg << "height " << 100.0 * dh << "% off, mass " << 100.0 * dm << "% off";
      c.message = msg.str();
    } catch (const std::exception& e) {
      c.pass = false;
      c.message = e.what();
    }
    out.checks.push_back(c);
  }
  return out;
}

MorphologyRegistry MorphologyRegistry::builtin() {
  MorphologyRegistry r;
  struct Row {
    const char* id;
    double height, mass, ratio;
    int dof;
  };
  // Height, DoF and mass of the kid-size suite; limb ratios are estimates.
  constexpr Row kKidSize[] = {
      {"bez1", 0.48, 2.82, 0.45, 18},    {"op3_rot", 0.49, 3.15, 0.45, 20}, {"bez2", 0.54, 3.86, 0.47, 20},
      {"bez3", 0.62, 3.18, 0.50, 18},    {"sigmaban", 0.67, 7.80, 0.48, 20}, {"wolfgang", 0.77, 6.12, 0.52, 20},
      {"nugus", 0.81, 6.68, 0.55, 20},
  };
  for (const Row& row : kKidSize) {
    MorphologySource s;
    s.id = row.id;
    s.scale = ProceduralScale{row.height, row.mass, row.ratio};
    s.options.id = row.id;
    s.options.extra_dof = row.dof - 14;
    s.declared_height = row.height;
    s.declared_mass = row.mass;
    r.add(s);
  }
  constexpr Row kDesk[] = {
      {"proc_small", 0.45, 2.5, 0.45, 14},
      {"proc_mid", 0.55, 3.5, 0.485, 14},
      {"proc_large", 0.65, 4.5, 0.52, 14},
  };
  for (const Row& row : kDesk) {
    MorphologySource s;
    s.id = row.id;
    s.scale = ProceduralScale{row.height, row.mass, row.ratio};
    s.options.id = row.id;
    r.add(s);
  }
  return r;
}

void MorphologyRegistry::add(MorphologySource source) {
  const std::string id = source.id;
  sources_[id] = std::move(source);
}

bool MorphologyRegistry::contains(const std::string& id) const { return sources_.count(id) > 0; }

std::vector<std::string> MorphologyRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : sources_) out.push_back(id);
  return out;
}

const MorphologySource& MorphologyRegistry::source(const std::string& id) const {
  const auto it = sources_.find(id);
  if (it == sources_.end()) {
    std::string known;
    for (const auto& k : ids()) known += (known.empty() ? "" : ", ") + k;
    throw ArgumentError("unknown morphology '" + id + "'; registered: " + known);
  }
  return it->second;
}

MorphologySpec MorphologyRegistry::materialize(const std::string& id, const std::filesystem::path& model_dir) const {
  const MorphologySource& s = source(id);
  MorphologySpec spec;
  if (s.scale) {
    const ProceduralModel pm = generate_procedural_humanoid(*s.scale, s.options);
    const auto path = model_dir / (id + ".xml");
    if (!std::filesystem::exists(path) || read_text_file(path) != pm.xml) {
      spec = write_procedural_model(pm, path);
    } else {
      spec = pm.spec;
      spec.model_path = path;
    }
  } else {
    MorphologyOverrides ov;
    if (!s.overrides_path.empty()) ov = load_overrides(s.overrides_path);
    ov.id = id;
    spec = load_morphology(s.model_path, ov);
  }
  if (s.declared_height) spec.height = *s.declared_height;
  if (s.declared_mass) spec.mass = *s.declared_mass;
  spec.validate();
  return spec;
}

std::vector<MorphologySpec> MorphologyRegistry::materialize(const std::vector<std::string>& ids,
                                                            const std::filesystem::path& model_dir) const {
  std::vector<MorphologySpec> out;
  for (const auto& id : ids) out.push_back(materialize(id, model_dir));
  return out;
}

}  // namespace getup
