#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "getup/env/backend.hpp"
#include "getup/morph/suite.hpp"

namespace getup::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("getup_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

// Built-in morphology compiled once per test binary.
inline std::shared_ptr<const MorphologyAsset> asset(const std::string& id) {
  static std::map<std::string, std::shared_ptr<const MorphologyAsset>> cache;
  auto it = cache.find(id);
  if (it == cache.end()) {
    const MorphologySpec spec = MorphologyRegistry::builtin().materialize(id, scratch_dir("models"));
    it = cache.emplace(id, load_asset(spec)).first;
  }
  return it->second;
}

}  // namespace getup::testing
