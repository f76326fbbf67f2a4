#include "getup/app/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/learn/trainer.hpp"
#include "getup/morph/mujoco_model.hpp"
#include "getup/stats/report.hpp"

namespace getup {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LoadedConfig {
  ExperimentConfig config;
  std::string file_sha;
  std::string text;
};

LoadedConfig load_config(const fs::path& path) {
  LoadedConfig c;
  try {
    c.text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  c.config = experiment_config_from_json(yaml_to_json(c.text), path.parent_path());
  c.file_sha = sha256_hex(c.text);
  return c;
}

void check_ids(const MorphologyRegistry& reg, const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (!reg.contains(id)) {
      std::string known;
      for (const auto& k : reg.ids()) known += (known.empty() ? "" : ", ") + k;
      throw ArgumentError("unknown morphology '" + id + "'; registered: " + known);
    }
  }
}

// Materializes and loads morphologies once per process.
class AssetCache {
 public:
  AssetCache(MorphologyRegistry reg, fs::path dir) : reg_(std::move(reg)), dir_(std::move(dir)) {}
  std::shared_ptr<const MorphologyAsset> get(const std::string& id) {
    auto it = cache_.find(id);
    if (it == cache_.end()) it = cache_.emplace(id, load_asset(reg_.materialize(id, dir_))).first;
    return it->second;
  }
  std::vector<std::shared_ptr<const MorphologyAsset>> get(const std::vector<std::string>& ids) {
    std::vector<std::shared_ptr<const MorphologyAsset>> out;
    for (const auto& id : ids) out.push_back(get(id));
    return out;
  }
  std::vector<fs::path> files() const {
    std::vector<fs::path> out;
    for (const auto& [id, a] : cache_) out.push_back(a->spec.model_path);
    return out;
  }

 private:
  MorphologyRegistry reg_;
  fs::path dir_;
  std::map<std::string, std::shared_ptr<const MorphologyAsset>> cache_;
};

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

Json read_json(const fs::path& p) {
  try {
    return Json::parse(read_text_file(p));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read " + p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const Json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

// Files referenced by a manifest, relative to its directory.
void collect_paths(const Json& j, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_string() && (k == "checkpoint" || k == "metrics" || k == "path" || k == "config_copy"))
        out.push_back(v.get<std::string>());
      else
        collect_paths(v, out);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_paths(v, out);
  }
}

// Opens a run directory's manifest, refusing a different configuration.
Json open_manifest(const fs::path& dir, const std::string& command, const std::string& resolved_sha,
                   const LoadedConfig& cfg) {
  const fs::path path = dir / "manifest.json";
  if (fs::exists(path)) {
    Json m = read_json(path);
    if (m.value("command", "") != command || m.value("resolved_config_sha256", "") != resolved_sha) {
      throw ConfigError(path.string() + ": written by a different command or configuration; use a new --out");
    }
    return m;
  }
  Json m;
  m["experiment"] = cfg.config.id;
  m["command"] = command;
  m["config_sha256"] = cfg.file_sha;
  m["resolved_config_sha256"] = resolved_sha;
  m["config_copy"] = "config.yaml";
  m["created"] = now_utc();
  m["jobs"] = Json::object();
  m["models"] = Json::array();
  m["statistics"] = Json::array();
  write_file_atomic(dir / "config.yaml", cfg.text);
  return m;
}

void record_models(Json& manifest, const AssetCache& assets, const fs::path& dir) {
  Json models = Json::array();
  for (const auto& p : assets.files()) models.push_back({{"path", rel(p, dir)}});
  manifest["models"] = models;
}

// ---- protocol runner with a manifest-backed cache

class CachedRunner : public ProtocolRunner {
 public:
  CachedRunner(const ExperimentConfig& cfg, fs::path dir, Json& manifest, AssetCache& assets, std::ostream& log,
               bool cache_only)
      : cfg_(cfg), dir_(std::move(dir)), manifest_(manifest), assets_(assets), log_(log), cache_only_(cache_only) {}

  std::string train(const TrainJob& job) override {
    Json& entry = manifest_["jobs"][job.id];
    const fs::path jdir = dir_ / "jobs" / job.id;
    if (entry.is_object() && entry.value("status", "") == "complete" && fs::exists(dir_ / entry["checkpoint"].get<std::string>())) {
      return (dir_ / entry["checkpoint"].get<std::string>()).string();
    }
    if (cache_only_) throw std::runtime_error("not trained yet");
    // Incomplete runs restart from scratch so results do not depend on
    // where an interruption happened.
    fs::remove_all(jdir);
    entry = Json::object();
    entry["status"] = "running";
    entry["train_set"] = job.train_set;
    entry["seed"] = job.seed;
    entry["evaluations"] = Json::object();
    save();
    log_ << "train " << job.id << " on [" << join(job.train_set) << "] seed " << job.seed << std::endl;
    TrainConfig tc = cfg_.train;
    tc.checkpoint_interval = 0;
    TrainOptions opt;
    opt.env = cfg_.env;
    opt.randomization = cfg_.randomization;
    opt.randomize = cfg_.randomize;
    opt.out_dir = jdir;
    try {
      train_policy(tc, job, opt);
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      if (fs::exists(jdir / "diagnostic.ckpt")) entry["diagnostic"] = {{"path", rel(jdir / "diagnostic.ckpt", dir_)}};
      if (fs::exists(jdir / "metrics.csv")) entry["metrics"] = rel(jdir / "metrics.csv", dir_);
      save();
      throw;
    }
    entry["status"] = "complete";
    entry["checkpoint"] = rel(jdir / "policy.ckpt", dir_);
    entry["metrics"] = rel(jdir / "metrics.csv", dir_);
    entry["finished"] = now_utc();
    save();
    return (jdir / "policy.ckpt").string();
  }

  std::vector<EpisodeResult> evaluate(const TrainJob& job, const std::string& policy, const EvalJob& e) override {
    Json& evals = manifest_["jobs"][job.id]["evaluations"];
    const std::string key = e.morphology;
    if (evals.is_object() && evals.contains(key)) {
      const Json& rec = evals[key];
      const fs::path p = dir_ / rec["path"].get<std::string>();
      if (rec.value("seed", std::uint64_t{0}) == e.seed && rec.value("episodes", 0) == e.episodes && fs::exists(p))
        return parse_episodes_csv(read_text_file(p));
    }
    if (cache_only_) throw std::runtime_error("not evaluated yet");
    if (loaded_path_ != policy) {
      loaded_ = load_checkpoint(policy);
      loaded_path_ = policy;
    }
    Rng rng(e.seed);
    EvalOptions opt;
    opt.randomize = cfg_.randomize;
    opt.randomization = cfg_.randomization;
    opt.env = cfg_.env;
    auto results = evaluate_policy(loaded_, assets_.get(e.morphology), e.episodes, rng, opt);
    const fs::path out = dir_ / "jobs" / job.id / ("eval_" + e.morphology + ".csv");
    write_file_atomic(out, episodes_csv(results));
    evals[key] = {{"path", rel(out, dir_)}, {"episodes", e.episodes}, {"seed", e.seed}};
    save();
    return results;
  }

 private:
  void train_policy(const TrainConfig& tc, const TrainJob& job, TrainOptions opt) {
    opt.on_log = [&](const MetricsRow& r) {
      log_ << "  " << job.id << " step " << r.step << " " << r.morphology << " success " << r.success_rate
           << std::endl;
    };
    getup::train(tc, assets_.get(job.train_set), job.seed, opt);
  }

  void save() {
    manifest_["updated"] = now_utc();
    record_models(manifest_, assets_, dir_);
    write_json(dir_ / "manifest.json", manifest_);
  }

  const ExperimentConfig& cfg_;
  fs::path dir_;
  Json& manifest_;
  AssetCache& assets_;
  std::ostream& log_;
  bool cache_only_;
  PolicyCheckpoint loaded_;
  std::string loaded_path_;
};

struct ProtocolRun {
  JobPlan plan;
  // Optional specialist rows run alongside loo.
  std::optional<JobPlan> specialists;
};

std::vector<ScalingSet> scaling_sets_for(const ExperimentConfig& cfg, const std::string& holdout) {
  const auto it = cfg.protocol.scaling_sets.find(holdout);
  if (it == cfg.protocol.scaling_sets.end()) {
    std::string known;
    for (const auto& [h, s] : cfg.protocol.scaling_sets) known += (known.empty() ? "" : ", ") + h;
    throw ConfigError("protocol.scaling_sets: no sets for holdout '" + holdout + "' (configured: " +
                      (known.empty() ? "none" : known) + ")");
  }
  return it->second;
}

std::vector<std::string> all_ids(const ExperimentConfig& cfg, const std::string& kind, const std::string& holdout) {
  std::vector<std::string> ids = cfg.suite;
  if (kind == "scale") {
    ids = {holdout};
    for (const auto& s : scaling_sets_for(cfg, holdout)) ids.insert(ids.end(), s.members.begin(), s.members.end());
  }
  return ids;
}

// Runs (or, with cache_only, re-reads) a protocol and writes its report.
int run_protocol(const std::string& kind, const ExperimentConfig& cfg, const std::string& holdout,
                 const fs::path& dir, Json& manifest, std::ostream& out, bool cache_only) {
  AssetCache assets(cfg.registry(), dir / "models");
  CachedRunner runner(cfg, dir, manifest, assets, out, cache_only);
  const ProtocolSettings& s = cfg.protocol.settings;
  Report report;
  bool partial = false;
  auto note = [&](const Cell& c) { partial |= !c.complete(); };
  if (kind == "loo") {
    std::map<std::string, SuccessStatistics> spec;
    if (cfg.protocol.loo_specialists) {
      const JobPlan sp = plan_compare(cfg.suite, s, false);
      const PlanOutcome outcome = execute(sp, runner);
      for (std::size_t i = 0; i < cfg.suite.size(); ++i) {
        Rng rng(derive_seed(s.experiment_seed, 0x5350ULL + i));
        const Cell c = aggregate_cell(sp, outcome, "specialist_" + cfg.suite[i], cfg.suite[i], rng, s);
        note(c);
        if (c.stats) spec[cfg.suite[i]] = *c.stats;
      }
    }
    report.loo = loo_protocol(cfg.suite, runner, s, cfg.protocol.loo_specialists ? &spec : nullptr);
    for (const auto& row : report.loo->cells)
      for (const auto& c : row) note(c);
  } else if (kind == "scale") {
    report.scaling.push_back(scaling_protocol(scaling_sets_for(cfg, holdout), holdout, runner, s));
    for (const auto& p : report.scaling.back().points) note(p.cell);
  } else {
    report.compare = compare_protocol(cfg.suite, runner, s);
    for (const auto& c : report.compare->shared) note(c);
    for (const auto& c : report.compare->specialist) note(c);
  }
  const auto files = emit_report(report, dir / "report");
  Json stats = Json::array();
  for (const auto& f : files) stats.push_back({{"path", rel(f, dir)}});
  manifest["statistics"] = stats;
  manifest["partial"] = partial;
  manifest["updated"] = now_utc();
  record_models(manifest, assets, dir);
  write_json(dir / "manifest.json", manifest);
  out << "report written to " << (dir / "report").string() << (partial ? " (some cells failed)" : "") << "\n";
  return partial ? kExitPartial : kExitOk;
}

JobPlan plan_for(const std::string& kind, const ExperimentConfig& cfg, const std::string& holdout) {
  const ProtocolSettings& s = cfg.protocol.settings;
  if (kind == "loo") return plan_loo(cfg.suite, s);
  if (kind == "scale") return plan_scaling(scaling_sets_for(cfg, holdout), holdout, s);
  return plan_compare(cfg.suite, s);
}

}  // namespace

int env_threads_from_environment(int fallback) {
  const char* v = std::getenv("GETUP_THREADS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("GETUP_THREADS: expected a positive integer, got '") + v + "'");
  return static_cast<int>(n);
}

// ---- episodes CSV

std::string episodes_csv(const std::vector<EpisodeResult>& results) {
  std::ostringstream os;
  os << "episode,morphology,seed,success,steps,termination,cumulative_reward,mass_scale,com_offset_scale,"
        "friction_scale_ground,friction_scale_actuator,gain_scale,imu_roll_deg,imu_pitch_deg,imu_yaw_deg\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& s = r.randomization;
    os << i << "," << r.morphology << "," << r.seed << "," << (r.success ? 1 : 0) << "," << r.steps << ","
       << to_string(r.termination) << "," << fmt(r.cumulative_reward) << "," << fmt(s.mass_scale) << ","
       << fmt(s.com_offset_scale) << "," << fmt(s.friction_scale_ground) << "," << fmt(s.friction_scale_actuator)
       << "," << fmt(s.gain_scale) << "," << fmt(s.imu_offset_rpy_deg[0]) << "," << fmt(s.imu_offset_rpy_deg[1])
       << "," << fmt(s.imu_offset_rpy_deg[2]) << "\n";
  }
  return os.str();
}

std::vector<EpisodeResult> parse_episodes_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);  // header
  std::vector<EpisodeResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 15) throw std::runtime_error("malformed episode row: " + line);
    EpisodeResult r;
    r.morphology = f[1];
    r.seed = std::stoull(f[2]);
    r.success = f[3] == "1";
    r.steps = std::stoi(f[4]);
    r.termination = parse_termination(f[5]);
    r.cumulative_reward = std::stod(f[6]);
    auto& s = r.randomization;
    s.mass_scale = std::stod(f[7]);
    s.com_offset_scale = std::stod(f[8]);
    s.friction_scale_ground = std::stod(f[9]);
    s.friction_scale_actuator = std::stod(f[10]);
    s.gain_scale = std::stod(f[11]);
    for (int k = 0; k < 3; ++k) s.imu_offset_rpy_deg[static_cast<std::size_t>(k)] = std::stod(f[12 + static_cast<std::size_t>(k)]);
    out.push_back(r);
  }
  return out;
}

// ---- commands

int cmd_list(std::ostream& out) {
  const auto reg = MorphologyRegistry::builtin();
  for (const auto& id : reg.ids()) out << id << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  LoadedConfig lc = load_config(args.config);
  ExperimentConfig& cfg = lc.config;
  if (args.suite) {
    cfg.suite.clear();
    for (const auto& m : split_list(*args.suite)) cfg.suite.push_back(canonical_morphology_id(m));
  }
  if (cfg.suite.empty()) throw ConfigError("suite: no morphologies (set suite in the config or pass --suite)");
  if (args.algorithm) {
    try {
      cfg.train.algorithm = parse_algorithm(*args.algorithm);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("--algo: ") + e.what());
    }
  }
  if (args.steps) cfg.train.total_steps = *args.steps;
  cfg.train.env_threads = env_threads_from_environment(cfg.train.env_threads);
  try {
    cfg.train.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  const std::uint64_t seed = args.seed.value_or(cfg.train.seeds.empty() ? 0 : cfg.train.seeds.front());
  const auto reg = cfg.registry();
  check_ids(reg, cfg.suite);

  Json resolved = cfg.to_json();
  resolved["train"].erase("env_threads");  // does not change results
  resolved["seed"] = seed;
  const std::string resolved_sha = sha256_hex(resolved.dump());
  out << "train " << to_string(cfg.train.algorithm) << " on [" << join(cfg.suite) << "] seed " << seed
      << " for " << cfg.train.total_steps << " steps -> " << args.out.string() << "\n";
  if (args.dry_run) return kExitOk;

  fs::create_directories(args.out);
  Json manifest = open_manifest(args.out, "train", resolved_sha, lc);
  AssetCache assets(reg, args.out / "models");
  TrainOptions opt;
  opt.env = cfg.env;
  opt.randomization = cfg.randomization;
  opt.randomize = cfg.randomize;
  opt.out_dir = args.out;
  if (args.resume && fs::exists(args.out / "state.ckpt")) opt.resume_from = args.out / "state.ckpt";
  if (!args.resume) fs::remove(args.out / "metrics.csv");
  opt.on_log = [&](const MetricsRow& r) {
    out << "step " << r.step << " " << r.morphology << " return " << r.mean_return << " success " << r.success_rate
        << " critic " << r.critic_loss << "\n";
    out.flush();
  };
  manifest["suite"] = cfg.suite;
  manifest["seeds"] = Json::array({seed});
  Json job;
  job["status"] = "running";
  manifest["jobs"]["train"] = job;
  record_models(manifest, assets, args.out);
  write_json(args.out / "manifest.json", manifest);
  try {
    train(cfg.train, assets.get(cfg.suite), seed, opt);
  } catch (const TrainingDiverged& e) {
    manifest["jobs"]["train"]["status"] = "failed";
    manifest["jobs"]["train"]["error"] = e.what();
    if (fs::exists(args.out / "diagnostic.ckpt")) manifest["jobs"]["train"]["diagnostic"] = {{"path", "diagnostic.ckpt"}};
    write_json(args.out / "manifest.json", manifest);
    throw;
  }
  job["status"] = "complete";
  job["checkpoint"] = "policy.ckpt";
  job["metrics"] = "metrics.csv";
  if (fs::exists(args.out / "state.ckpt")) job["state"] = {{"path", "state.ckpt"}};
  job["finished"] = now_utc();
  manifest["jobs"]["train"] = job;
  manifest["updated"] = now_utc();
  record_models(manifest, assets, args.out);
  write_json(args.out / "manifest.json", manifest);
  out << "wrote " << (args.out / "policy.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  if (args.episodes < 1) throw ArgumentError("--episodes must be >= 1");
  MorphologyRegistry reg = MorphologyRegistry::builtin();
  if (args.config) reg = load_experiment_config(*args.config).registry();
  const std::string id = canonical_morphology_id(args.morphology);
  check_ids(reg, {id});
  if (!fs::exists(args.checkpoint)) throw ArgumentError("checkpoint not found: " + args.checkpoint.string());
  const PolicyCheckpoint ckpt = load_checkpoint(args.checkpoint);
  const fs::path model_dir = fs::temp_directory_path() / "getup_models";
  const auto asset = load_asset(reg.materialize(id, model_dir));
  Rng rng(args.seed);
  EvalOptions opt;
  opt.randomize = !args.no_randomize;
  const auto results = evaluate_policy(ckpt, asset, args.episodes, rng, opt);
  const std::string csv = episodes_csv(results);
  if (args.out) {
    write_file_atomic(*args.out, csv);
    int wins = 0;
    for (const auto& r : results) wins += r.success;
    out << id << ": " << wins << "/" << results.size() << " successful\n";
  } else {
    out << csv;
  }
  return kExitOk;
}

int cmd_protocol(const ProtocolArgs& args, std::ostream& out) {
  if (args.kind != "loo" && args.kind != "scale" && args.kind != "compare")
    throw ArgumentError("unknown protocol '" + args.kind + "' (loo, scale, compare)");
  LoadedConfig lc = load_config(args.config);
  ExperimentConfig& cfg = lc.config;
  if (args.suite) {
    cfg.suite.clear();
    for (const auto& m : split_list(*args.suite)) cfg.suite.push_back(canonical_morphology_id(m));
  }
  cfg.train.env_threads = env_threads_from_environment(cfg.train.env_threads);
  std::string holdout = args.holdout ? canonical_morphology_id(*args.holdout) : cfg.protocol.holdout;
  if (args.kind == "scale" && holdout.empty()) throw ConfigError("scale protocol needs --holdout or protocol.holdout");
  check_ids(cfg.registry(), all_ids(cfg, args.kind, holdout));
  JobPlan plan = plan_for(args.kind, cfg, holdout);
  if (args.kind == "loo" && cfg.protocol.loo_specialists) {
    out << plan_compare(cfg.suite, cfg.protocol.settings, false).describe();
  }
  out << plan.describe();
  if (args.dry_run) return kExitOk;

  const Json cfg_json = cfg.to_json();
  Json resolved = cfg_json;
  resolved["train"].erase("env_threads");
  resolved["protocol_kind"] = args.kind;
  resolved["holdout"] = holdout;
  const std::string resolved_sha = sha256_hex(resolved.dump());
  fs::create_directories(args.out);
  Json manifest = open_manifest(args.out, "protocol " + args.kind, resolved_sha, lc);
  manifest["suite"] = args.kind == "scale" ? Json(all_ids(cfg, args.kind, holdout)) : Json(cfg.suite);
  Json seeds = Json::array();
  for (int i = 0; i < cfg.protocol.settings.n_seeds; ++i) seeds.push_back(i);
  manifest["seeds"] = seeds;
  if (!holdout.empty()) manifest["holdout"] = holdout;
  manifest["kind"] = args.kind;
  manifest["resolved_config"] = cfg_json;
  return run_protocol(args.kind, cfg, holdout, args.out, manifest, out, false);
}

int cmd_report(const ReportArgs& args, std::ostream& out) {
  const fs::path mpath = args.dir / "manifest.json";
  if (!fs::exists(mpath)) throw ArgumentError("no manifest.json in " + args.dir.string());
  Json manifest = read_json(mpath);
  const std::string kind = manifest.value("kind", "");
  if (kind.empty()) throw ArgumentError(mpath.string() + " is not a protocol run");
  if (!manifest.contains("resolved_config")) throw ArgumentError(mpath.string() + " has no resolved configuration");
  const ExperimentConfig cfg = experiment_config_from_json(manifest["resolved_config"]);
  const std::string holdout = manifest.value("holdout", "");
  return run_protocol(kind, cfg, holdout, args.dir, manifest, out, true);
}

}  // namespace getup
