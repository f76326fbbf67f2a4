#include "getup/learn/replay.hpp"

#include <algorithm>

#include "getup/core/error.hpp"
#include "getup/learn/serialize.hpp"

namespace getup {

namespace {
constexpr std::size_t kO = kObsDim;
constexpr std::size_t kA = kActDim;
}  // namespace

ReplayBuffer::ReplayBuffer(std::int64_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw ArgumentError("replay capacity must be positive");
  const auto n = static_cast<std::size_t>(capacity);
  obs_.resize(n * kO);
  next_obs_.resize(n * kO);
  act_.resize(n * kA);
  reward_.resize(n);
  terminal_.resize(n);
  morph_.resize(n);
}

void ReplayBuffer::push(const ObservationVector& obs, const Vec5& action, double reward,
                        const ObservationVector& next_obs, bool terminal, int morphology) {
  if (!std::isfinite(reward)) throw ArgumentError("replay: non-finite reward");
  const auto i = static_cast<std::size_t>(head_);
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(i * kO));
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(i * kO));
  std::copy(action.begin(), action.end(), act_.begin() + static_cast<std::ptrdiff_t>(i * kA));
  reward_[i] = static_cast<float>(reward);
  terminal_[i] = terminal ? 1 : 0;
  morph_[i] = morphology;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::int64_t> ReplayBuffer::sample_indices(std::int64_t n, Rng& rng) const {
  if (size_ == 0) throw UsageError("sampling from an empty replay buffer");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(size_)));
  return idx;
}

Batch<float> ReplayBuffer::gather(const std::vector<std::int64_t>& idx, const ObsNormalizer& norm) const {
  const auto B = static_cast<Eigen::Index>(idx.size());
  Batch<float> b;
  b.obs.resize(kObsDim, B);
  b.next_obs.resize(kObsDim, B);
  b.act.resize(kActDim, B);
  b.reward.resize(B);
  b.terminal.resize(B);
  for (Eigen::Index c = 0; c < B; ++c) {
    const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(c)]);
    norm.apply(obs_.data() + i * kO, b.obs.col(c).data());
    norm.apply(next_obs_.data() + i * kO, b.next_obs.col(c).data());
    std::copy_n(act_.data() + i * kA, kA, b.act.col(c).data());
    b.reward(c) = reward_[i];
    b.terminal(c) = terminal_[i] ? 1.0f : 0.0f;
  }
  return b;
}

ObservationVector ReplayBuffer::observation(std::int64_t i) const {
  ObservationVector o;
  std::copy_n(obs_.data() + static_cast<std::size_t>(i) * kO, kO, o.begin());
  return o;
}

Vec5 ReplayBuffer::action(std::int64_t i) const {
  Vec5 a;
  std::copy_n(act_.data() + static_cast<std::size_t>(i) * kA, kA, a.begin());
  return a;
}

namespace {
template <class T>
void write_vec(std::ostream& os, const std::vector<T>& v, std::size_t n) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}
template <class T>
void read_vec(std::istream& is, std::vector<T>& v, std::size_t n) {
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw std::runtime_error("truncated replay section");
}
}  // namespace

void ReplayBuffer::save(std::ostream& os) const {
  bin::write_u64(os, static_cast<std::uint64_t>(capacity_));
  bin::write_u64(os, static_cast<std::uint64_t>(size_));
  bin::write_u64(os, static_cast<std::uint64_t>(head_));
  const auto n = static_cast<std::size_t>(capacity_);
  write_vec(os, obs_, n * kO);
  write_vec(os, next_obs_, n * kO);
  write_vec(os, act_, n * kA);
  write_vec(os, reward_, n);
  write_vec(os, terminal_, n);
  write_vec(os, morph_, n);
}

void ReplayBuffer::load(std::istream& is) {
  const auto cap = static_cast<std::int64_t>(bin::read_u64(is));
  *this = ReplayBuffer(cap);
  size_ = static_cast<std::int64_t>(bin::read_u64(is));
  head_ = static_cast<std::int64_t>(bin::read_u64(is));
  const auto n = static_cast<std::size_t>(cap);
  read_vec(is, obs_, n * kO);
  read_vec(is, next_obs_, n * kO);
  read_vec(is, act_, n * kA);
  read_vec(is, reward_, n);
  read_vec(is, terminal_, n);
  read_vec(is, morph_, n);
}

void ObsNormalizer::update(const ObservationVector& o) {
  count_ += 1.0;
  for (int i = 0; i < kObsDim; ++i) {
    const double d = o[i] - mean_[i];
    mean_[i] += d / count_;
    m2_[i] += d * (o[i] - mean_[i]);
  }
}

void ObsNormalizer::save(std::ostream& os) const {
  bin::write_u64(os, enabled_ ? 1 : 0);
  bin::write_f64(os, count_);
  for (double v : mean_) bin::write_f64(os, v);
  for (double v : m2_) bin::write_f64(os, v);
}

void ObsNormalizer::load(std::istream& is) {
  enabled_ = bin::read_u64(is) != 0;
  count_ = bin::read_f64(is);
  for (double& v : mean_) v = bin::read_f64(is);
  for (double& v : m2_) v = bin::read_f64(is);
}

}  // namespace getup
