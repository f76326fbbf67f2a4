#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "getup/learn/agent.hpp"

namespace getup {

// Fixed-capacity ring of transitions stored in single precision with raw
// (unnormalized) observations.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::int64_t capacity);

  void push(const ObservationVector& obs, const Vec5& action, double reward, const ObservationVector& next_obs,
            bool terminal, int morphology);
  std::int64_t size() const { return size_; }
  std::int64_t capacity() const { return capacity_; }

  // Uniform with replacement over the stored transitions.
  std::vector<std::int64_t> sample_indices(std::int64_t n, Rng& rng) const;
  Batch<float> gather(const std::vector<std::int64_t>& idx, const ObsNormalizer& norm) const;
  Batch<float> sample(std::int64_t n, Rng& rng, const ObsNormalizer& norm) const {
    return gather(sample_indices(n, rng), norm);
  }

  // Slot i's contents, for inspection.
  ObservationVector observation(std::int64_t i) const;
  Vec5 action(std::int64_t i) const;
  float reward(std::int64_t i) const { return reward_[static_cast<std::size_t>(i)]; }
  bool terminal(std::int64_t i) const { return terminal_[static_cast<std::size_t>(i)] != 0; }
  int morphology(std::int64_t i) const { return morph_[static_cast<std::size_t>(i)]; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::int64_t capacity_;
  std::int64_t size_ = 0;
  std::int64_t head_ = 0;
  std::vector<float> obs_, next_obs_, act_, reward_;
  std::vector<std::uint8_t> terminal_;
  std::vector<std::int32_t> morph_;
};

}  // namespace getup
