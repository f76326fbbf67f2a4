#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "getup/app/config.hpp"
#include "getup/env/types.hpp"

namespace getup {

enum ExitCode { kExitOk = 0, kExitPartial = 1, kExitUsage = 2 };

struct TrainArgs {
  std::filesystem::path config;
  std::optional<std::string> suite;  // comma separated
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algorithm;
  std::optional<std::int64_t> steps;
  std::filesystem::path out;
  bool resume = false;
  bool dry_run = false;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::string morphology;
  int episodes = 100;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;     // stdout when unset
  std::optional<std::filesystem::path> config;  // for custom models
  bool no_randomize = false;
};

struct ProtocolArgs {
  std::string kind;  // loo, scale, compare
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::string> holdout;
  std::optional<std::string> suite;
  bool dry_run = false;
};

struct ReportArgs {
  std::filesystem::path dir;
};

// Each returns an ExitCode; usage and config problems throw ConfigError or
// ArgumentError, which the entry point maps to kExitUsage.
int cmd_train(const TrainArgs& args, std::ostream& out);
int cmd_eval(const EvalArgs& args, std::ostream& out);
int cmd_protocol(const ProtocolArgs& args, std::ostream& out);
int cmd_report(const ReportArgs& args, std::ostream& out);
int cmd_list(std::ostream& out);

// Episode table shared by eval and the protocol cache.
std::string episodes_csv(const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> parse_episodes_csv(const std::string& text);

// Backend threads from GETUP_THREADS, or `fallback`.
int env_threads_from_environment(int fallback);

}  // namespace getup
