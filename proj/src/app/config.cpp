#include "getup/app/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <set>
#include <sstream>

#include "getup/core/error.hpp"
#include "getup/morph/mujoco_model.hpp"

namespace getup {

namespace {

Json yaml_node(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json a = Json::array();
      for (const auto& e : n) a.push_back(yaml_node(e));
      return a;
    }
    case YAML::NodeType::Map: {
      Json o = Json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_node(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "false") return s == "true";
  if (s == "null" || s == "~") return nullptr;
  long long i = 0;
  if (YAML::convert<long long>::decode(n, i) && s.find_first_of(".eE") == std::string::npos) return i;
  double d = 0;
  if (YAML::convert<double>::decode(n, d)) return d;
  return s;
}

// Minimal strict object reader for the sections owned here.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a mapping");
  }
  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }
  const Json* sub(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const std::string& key) const { return where_ + "." + key; }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path(k) + ": unknown key");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

BootstrapOptions bootstrap_from_json(const Json& j, const std::string& where) {
  BootstrapOptions b;
  Reader r(j, where);
  std::string method = to_string(b.method);
  r.get("iterations", b.iterations);
  r.get("level", b.level);
  r.get("method", method);
  r.get("episode_level", b.episode_level);
  r.finish();
  try {
    b.method = parse_bootstrap_method(method);
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ".method: " + e.what());
  }
  if (b.iterations < 1) throw ConfigError(where + ".iterations: must be >= 1");
  if (!(b.level > 0 && b.level < 1)) throw ConfigError(where + ".level: must lie in (0, 1)");
  return b;
}

ProtocolConfig protocol_from_json(const Json& j, const std::string& where) {
  ProtocolConfig p;
  Reader r(j, where);
  r.get("n_seeds", p.settings.n_seeds);
  r.get("n_episodes", p.settings.n_episodes);
  r.get("experiment_seed", p.settings.experiment_seed);
  r.get("alpha", p.settings.alpha);
  r.get("holdout", p.holdout);
  r.get("loo_specialists", p.loo_specialists);
  if (const Json* b = r.sub("bootstrap")) p.settings.bootstrap = bootstrap_from_json(*b, where + ".bootstrap");
  if (const Json* s = r.sub("scaling_sets")) {
    if (!s->is_object()) throw ConfigError(where + ".scaling_sets: expected a mapping of holdout to sets");
    for (const auto& [holdout, sets] : s->items()) {
      const std::string w = where + ".scaling_sets." + holdout;
      if (!sets.is_array()) throw ConfigError(w + ": expected a list");
      auto& out = p.scaling_sets[canonical_morphology_id(holdout)];
      for (std::size_t i = 0; i < sets.size(); ++i) {
        ScalingSet set;
        Reader sr(sets[i], w + "[" + std::to_string(i) + "]");
        sr.get("label", set.label);
        sr.get("members", set.members);
        sr.get("diverse", set.diverse);
        sr.finish();
        for (auto& m : set.members) m = canonical_morphology_id(m);
        if (set.label.empty()) set.label = std::to_string(set.members.size());
        out.push_back(std::move(set));
      }
    }
  }
  r.finish();
  if (p.settings.n_seeds < 1) throw ConfigError(where + ".n_seeds: must be >= 1");
  if (p.settings.n_episodes < 1) throw ConfigError(where + ".n_episodes: must be >= 1");
  if (!(p.settings.alpha > 0 && p.settings.alpha < 1)) throw ConfigError(where + ".alpha: must lie in (0, 1)");
  p.holdout = p.holdout.empty() ? p.holdout : canonical_morphology_id(p.holdout);
  return p;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void suite_from_json(const Json& j, const std::filesystem::path& base, ExperimentConfig& c) {
  if (j.is_array()) {
    try {
      c.suite = j.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("suite: expected a list of morphology ids");
    }
  } else {
    Reader r(j, "suite");
    r.get("morphologies", c.suite);
    if (const Json* models = r.sub("models")) {
      if (!models->is_object()) throw ConfigError("suite.models: expected a mapping of id to model");
      for (const auto& [id, m] : models->items()) {
        MorphologySource src;
        src.id = id;
        Reader mr(m, "suite.models." + id);
        std::string model, overrides;
        double height = 0, mass = 0;
        mr.get("model", model);
        mr.get("overrides", overrides);
        mr.get("height", height);
        mr.get("mass", mass);
        mr.finish();
        if (model.empty()) throw ConfigError("suite.models." + id + ".model: required");
        src.model_path = resolve(base, model);
        src.overrides_path = resolve(base, overrides);
        if (height > 0) src.declared_height = height;
        if (mass > 0) src.declared_mass = mass;
        c.custom_models.push_back(std::move(src));
      }
    }
    r.finish();
  }
  for (auto& m : c.suite) m = canonical_morphology_id(m);
}

}  // namespace

std::string canonical_morphology_id(const std::string& id) {
  static const std::map<std::string, std::string> aliases{
      {"op3", "op3_rot"}, {"sig", "sigmaban"}, {"bez_1", "bez1"}, {"bez_2", "bez2"}, {"bez_3", "bez3"}};
  std::string lower;
  for (char ch : id) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const auto it = aliases.find(lower);
  return it == aliases.end() ? lower : it->second;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Json yaml_to_json(const std::string& text) {
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsDefined() || root.IsNull()) return Json::object();
    return yaml_node(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Reader r(j, "config");
  r.get("id", c.id);
  if (const Json* s = r.sub("suite")) suite_from_json(*s, base_dir, c);
  if (const Json* e = r.sub("env")) c.env = env_config_from_json(*e, "env");
  if (const Json* rd = r.sub("randomization")) {
    Json copy = *rd;
    if (copy.is_object() && copy.contains("enabled")) {
      if (!copy["enabled"].is_boolean()) throw ConfigError("randomization.enabled: wrong type");
      c.randomize = copy["enabled"].get<bool>();
      copy.erase("enabled");
    }
    c.randomization = randomization_config_from_json(copy, "randomization");
  }
  if (const Json* t = r.sub("train")) c.train = train_config_from_json(*t, "train");
  if (const Json* p = r.sub("protocol")) c.protocol = protocol_from_json(*p, "protocol");
  r.finish();
  const auto check = [](auto&& fn, const std::string& where) {
    try {
      fn();
    } catch (const ArgumentError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  };
  check([&] { c.env.validate(); }, "env");
  check([&] { c.randomization.validate(); }, "randomization");
  check([&] { c.train.validate(); }, "train");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(yaml_to_json(text), path.parent_path());
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["id"] = id;
  Json models = Json::object();
  for (const auto& m : custom_models) {
    Json e;
    e["model"] = m.model_path.string();
    e["overrides"] = m.overrides_path.string();
    e["height"] = m.declared_height.value_or(0.0);
    e["mass"] = m.declared_mass.value_or(0.0);
    models[m.id] = e;
  }
  j["suite"] = {{"morphologies", suite}, {"models", models}};
  j["env"] = getup::to_json(env);
  Json rj = getup::to_json(randomization);
  rj["enabled"] = randomize;
  j["randomization"] = rj;
  j["train"] = getup::to_json(train);
  Json p;
  p["n_seeds"] = protocol.settings.n_seeds;
  p["n_episodes"] = protocol.settings.n_episodes;
  p["experiment_seed"] = protocol.settings.experiment_seed;
  p["alpha"] = protocol.settings.alpha;
  p["holdout"] = protocol.holdout;
  p["loo_specialists"] = protocol.loo_specialists;
  const auto& b = protocol.settings.bootstrap;
  p["bootstrap"] = {{"iterations", b.iterations},
                    {"level", b.level},
                    {"method", getup::to_string(b.method)},
                    {"episode_level", b.episode_level}};
  Json sets = Json::object();
  for (const auto& [h, list] : protocol.scaling_sets) {
    Json a = Json::array();
    for (const auto& s : list) a.push_back({{"label", s.label}, {"members", s.members}, {"diverse", s.diverse}});
    sets[h] = a;
  }
  p["scaling_sets"] = sets;
  j["protocol"] = p;
  return j;
}

MorphologyRegistry ExperimentConfig::registry() const {
  MorphologyRegistry reg = MorphologyRegistry::builtin();
  for (const auto& m : custom_models) reg.add(m);
  return reg;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace getup
