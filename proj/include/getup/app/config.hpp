#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "getup/learn/serialize.hpp"
#include "getup/morph/suite.hpp"
#include "getup/stats/protocol.hpp"

namespace getup {

struct ProtocolConfig {
  ProtocolSettings settings;
  std::string holdout;  // scale protocol default
  // Also train single-morphology specialists during loo and star cells
  // that differ significantly from them.
  bool loo_specialists = false;
  // Training sets per holdout morphology.
  std::map<std::string, std::vector<ScalingSet>> scaling_sets;
};

struct ExperimentConfig {
  std::string id = "experiment";
  std::vector<std::string> suite;
  std::vector<MorphologySource> custom_models;
  EnvConfig env;
  RandomizationConfig randomization;
  bool randomize = true;
  TrainConfig train;
  ProtocolConfig protocol;

  // Canonical form with every default filled in.
  Json to_json() const;
  // Registry with the built-ins plus custom_models.
  MorphologyRegistry registry() const;
};

// Parses YAML (or JSON, a YAML subset) with strict per-section readers.
// Relative model paths resolve against `base_dir`. Throws ConfigError with
// a field path ("protocol.n_seeds: ...").
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json yaml_to_json(const std::string& text);

std::string sha256_hex(const std::string& bytes);

// Built-in ids also accept a few short aliases ("op3" for "op3_rot").
std::string canonical_morphology_id(const std::string& id);
std::vector<std::string> split_list(const std::string& csv);

}  // namespace getup
