#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "getup/morph/morphology.hpp"
#include "getup/morph/procedural.hpp"

namespace getup {

struct SuiteCheck {
  std::string id;
  double declared_height = 0.0;
  double measured_height = 0.0;
  double declared_mass = 0.0;
  double measured_mass = 0.0;
  bool pass = false;
  std::string message;
};

struct SuiteValidation {
  std::vector<SuiteCheck> checks;
  bool all_pass() const;
};

// Re-measures every spec's model and compares total height and mass with
// the declared metadata at the given relative tolerance.
SuiteValidation validate_suite(const std::vector<MorphologySpec>& specs, double tolerance = 0.05);

// Where a registered morphology comes from.
struct MorphologySource {
  std::string id;
  // Either a procedural recipe...
  std::optional<ProceduralScale> scale;
  ProceduralOptions options;
  // ...or a model file with optional override file.
  std::filesystem::path model_path;
  std::filesystem::path overrides_path;
  // Declared metadata that overrides the measured values when set.
  std::optional<double> declared_height;
  std::optional<double> declared_mass;
};

class MorphologyRegistry {
 public:
  // Built-in entries: procedural stand-ins sized after the seven kid-size
  // robots (bez1, op3_rot, bez2, bez3, sigmaban, wolfgang, nugus) and the
  // desk-scale family proc_small / proc_mid / proc_large.
  static MorphologyRegistry builtin();

  void add(MorphologySource source);
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
  const MorphologySource& source(const std::string& id) const;

  // Loads (and for procedural entries, writes into `model_dir`) the spec.
  // Throws ArgumentError listing registered ids for unknown ones.
  MorphologySpec materialize(const std::string& id, const std::filesystem::path& model_dir) const;
  std::vector<MorphologySpec> materialize(const std::vector<std::string>& ids,
                                          const std::filesystem::path& model_dir) const;

 private:
  std::map<std::string, MorphologySource> sources_;
};

}  // namespace getup
