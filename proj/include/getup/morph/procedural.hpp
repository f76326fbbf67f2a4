#pragma once

#include <string>

#include "getup/morph/morphology.hpp"

namespace getup {

struct ProceduralScale {
  double height = 0.5;      // m, sole to top of head
  double mass = 3.0;        // kg
  double limb_ratio = 0.5;  // leg length / height
};

struct ProceduralOptions {
  std::string id = "procedural";
  // Joints beyond the 14 base ones (5 pitch groups per side plus hip and
  // ankle roll): 2 adds shoulder roll, 4 adds hip yaw, 6 adds head yaw/pitch.
  int extra_dof = 0;
};

struct ProceduralModel {
  std::string xml;
  MorphologySpec spec;
};

// Deterministic capsule-bodied biped already in canonical form. The spec's
// model_path is left empty until the XML is written somewhere.
ProceduralModel generate_procedural_humanoid(const ProceduralScale& scale, const ProceduralOptions& options = {});

// Writes the XML to `path` and records it as the spec's model path.
MorphologySpec write_procedural_model(const ProceduralModel& model, const std::filesystem::path& path);

}  // namespace getup
