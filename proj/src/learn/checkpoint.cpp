#include "getup/learn/checkpoint.hpp"

#include <fstream>

#include "getup/core/error.hpp"
#include "getup/learn/serialize.hpp"

namespace getup {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'T', 'U', 'P', 'C', 'K', 'P'};

void write_params(std::ostream& os, const std::vector<nn::Param<float>*>& ps) {
  bin::write_u64(os, ps.size());
  for (const auto* p : ps) bin::write_mat(os, p->value);
}

void read_params(std::istream& is, const std::vector<nn::Param<float>*>& ps) {
  if (bin::read_u64(is) != ps.size()) throw std::runtime_error("checkpoint network layout mismatch");
  for (auto* p : ps) bin::read_mat<float>(is, p->value);
}

void write_norms(std::ostream& os, nn::Mlp<float>& net) {
  const auto norms = net.norms();
  bin::write_u64(os, norms.size());
  for (const auto* n : norms) {
    bin::write_mat<float>(os, n->running_mean);
    bin::write_mat<float>(os, n->running_var);
    bin::write_u64(os, static_cast<std::uint64_t>(n->steps));
  }
}

void read_norms(std::istream& is, nn::Mlp<float>& net) {
  const auto norms = net.norms();
  if (bin::read_u64(is) != norms.size()) throw std::runtime_error("checkpoint normalization layout mismatch");
  for (auto* n : norms) {
    bin::read_mat<float>(is, n->running_mean);
    bin::read_mat<float>(is, n->running_var);
    n->steps = static_cast<std::int64_t>(bin::read_u64(is));
  }
}

void write_adam(std::ostream& os, const nn::Adam<float>& a) {
  bin::write_u64(os, static_cast<std::uint64_t>(a.t));
  bin::write_u64(os, a.m.size());
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    bin::write_mat(os, a.m[i]);
    bin::write_mat(os, a.v[i]);
  }
}

void read_adam(std::istream& is, nn::Adam<float>& a) {
  a.t = static_cast<std::int64_t>(bin::read_u64(is));
  if (bin::read_u64(is) != a.m.size()) throw std::runtime_error("checkpoint optimizer layout mismatch");
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    bin::read_mat<float>(is, a.m[i]);
    bin::read_mat<float>(is, a.v[i]);
  }
}

void write_agent(std::ostream& os, PolicyAgent& ag) {
  write_params(os, ag.actor.params());
  for (auto& c : ag.critics) {
    write_params(os, c.params());
    write_norms(os, c);
  }
  bin::write_u64(os, ag.targets.size());
  for (auto& t : ag.targets) write_params(os, t.params());
  bin::write_mat(os, ag.log_alpha.value);
  write_adam(os, ag.actor_opt);
  write_adam(os, ag.critic_opt);
  write_adam(os, ag.alpha_opt);
  bin::write_u64(os, static_cast<std::uint64_t>(ag.updates));
  ag.normalizer.save(os);
}

void read_agent(std::istream& is, PolicyAgent& ag) {
  read_params(is, ag.actor.params());
  for (auto& c : ag.critics) {
    read_params(is, c.params());
    read_norms(is, c);
  }
  if (bin::read_u64(is) != ag.targets.size()) throw std::runtime_error("checkpoint target layout mismatch");
  for (auto& t : ag.targets) read_params(is, t.params());
  bin::read_mat<float>(is, ag.log_alpha.value);
  read_adam(is, ag.actor_opt);
  read_adam(is, ag.critic_opt);
  read_adam(is, ag.alpha_opt);
  ag.updates = static_cast<std::int64_t>(bin::read_u64(is));
  ag.normalizer.load(is);
}

}  // namespace

Vec5 PolicyCheckpoint::act(const ObservationVector& obs) const {
  nn::Mat<float> x(kObsDim, 1);
  agent->normalizer.apply(obs.data(), x.data());
  const auto p = agent->policy(x, nullptr);
  Vec5 a;
  for (int k = 0; k < kActDim; ++k) a[k] = static_cast<double>(p.action(k, 0));
  return a;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt, const ReplayBuffer* replay) {
  if (!ckpt.agent) throw ArgumentError("checkpoint has no agent");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    bin::write_u64(os, PolicyCheckpoint::kVersion);
    Json h;
    h["train"] = to_json(ckpt.train);
    h["env"] = to_json(ckpt.env);
    h["randomization"] = to_json(ckpt.randomization);
    h["randomize"] = ckpt.randomize;
    h["morphologies"] = ckpt.morphologies;
    h["seed"] = ckpt.seed;
    h["step"] = ckpt.step;
    h["rng_state"] = ckpt.rng_state;
    h["env_rng_states"] = ckpt.env_rng_states;
    bin::write_string(os, h.dump());
    write_agent(os, *ckpt.agent);
    bin::write_u64(os, replay ? 1 : 0);
    if (replay) replay->save(os);
    if (!os) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path, std::unique_ptr<ReplayBuffer>* replay) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw std::runtime_error(path.string() + " is not a checkpoint");
  const auto version = bin::read_u64(is);
  if (version != PolicyCheckpoint::kVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const Json h = Json::parse(bin::read_string(is));
  PolicyCheckpoint c;
  c.train = train_config_from_json(h.at("train"));
  c.env = env_config_from_json(h.at("env"));
  c.randomization = randomization_config_from_json(h.at("randomization"));
  c.randomize = h.at("randomize").get<bool>();
  c.morphologies = h.at("morphologies").get<std::vector<std::string>>();
  c.seed = h.at("seed").get<std::uint64_t>();
  c.step = h.at("step").get<std::int64_t>();
  c.rng_state = h.at("rng_state").get<std::string>();
  c.env_rng_states = h.at("env_rng_states").get<std::vector<std::string>>();
  Rng init(0);
  c.agent = std::make_shared<PolicyAgent>(c.train, c.env.a_max, init);
  read_agent(is, *c.agent);
  const bool has_replay = bin::read_u64(is) != 0;
  if (has_replay && replay) {
    *replay = std::make_unique<ReplayBuffer>(1);
    (*replay)->load(is);
  }
  return c;
}

}  // namespace getup
