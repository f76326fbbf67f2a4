#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "getup/env/types.hpp"
#include "getup/learn/config.hpp"
#include "getup/learn/nn.hpp"
#include "getup/rand/randomization.hpp"

namespace getup {

using Json = nlohmann::ordered_json;

// Config <-> JSON. Readers are strict: unknown keys and wrong types raise
// ConfigError naming the offending field ("env.dt: ...") under `where`.
Json to_json(const EnvConfig& c);
Json to_json(const RandomizationConfig& c);
Json to_json(const TrainConfig& c);
EnvConfig env_config_from_json(const Json& j, const std::string& where = "env");
RandomizationConfig randomization_config_from_json(const Json& j, const std::string& where = "randomization");
TrainConfig train_config_from_json(const Json& j, const std::string& where = "train");

Json to_json(const RandomizationSample& s);
RandomizationSample randomization_sample_from_json(const Json& j);

namespace bin {

void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);
void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);
void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is);

template <class S>
void write_mat(std::ostream& os, const nn::Mat<S>& m) {
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(S) * m.size()));
}

template <class S, class M>
void read_mat(std::istream& is, M& m) {
  const auto r = static_cast<Eigen::Index>(read_u64(is));
  const auto c = static_cast<Eigen::Index>(read_u64(is));
  if (m.size() != 0 && (m.rows() != r || m.cols() != c)) throw std::runtime_error("checkpoint tensor shape mismatch");
  m.resize(r, c);
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(S) * m.size()));
  if (!is) throw std::runtime_error("truncated checkpoint");
}

}  // namespace bin
}  // namespace getup
