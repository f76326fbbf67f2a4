#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "getup/morph/morphology.hpp"

namespace getup {

struct NormalizationReport {
  std::string morphology_id;
  std::vector<std::string> fixes;
  std::vector<std::string> unresolved;

  bool clean() const { return unresolved.empty(); }
  std::string to_json() const;
};

struct NormalizedModel {
  std::string xml;
  NormalizationReport report;
};

struct NormalizeOptions {
  // Standing test applied to the initial pose.
  double stability_seconds = 2.0;
  double max_trunk_pitch = 0.2617993877991494;  // 15 deg
};

// Brings a raw MJCF model into the shared convention: canonical
// {side}_{group}_pitch names, pitch-aligned axes for the five groups,
// imu/head/foot reference sites, an "init" keyframe, and a statically
// stable initial hip/ankle pitch. Inapplicable fixes land in `unresolved`.
// An already canonical model is returned byte-for-byte.
NormalizedModel normalize_model(const std::string& raw_xml, const std::string& id,
                                const NormalizeOptions& options = {});

// Reads `path`, writes "<stem>.normalized.xml" and
// "<stem>.normalization.json" beside it, returns the report.
NormalizationReport normalize_model_file(const std::filesystem::path& path, const NormalizeOptions& options = {});

std::filesystem::path normalized_path(const std::filesystem::path& path);

}  // namespace getup
