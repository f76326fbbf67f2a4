#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "getup/stats/protocol.hpp"

namespace getup {

struct Report {
  std::optional<LOOMatrix> loo;
  std::vector<ScalingCurve> scaling;
  std::optional<CompareResult> compare;
  bool empty() const { return !loo && scaling.empty() && !compare; }
};

// Writes CSV tables, SVG figures and summary.md under `dir` and returns the
// written paths in a fixed order. An empty report writes nothing. Throws
// IoError when the directory cannot be written.
std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& dir);

// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace getup
