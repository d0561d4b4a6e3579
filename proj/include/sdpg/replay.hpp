#pragma once

#include <cstddef>
#include <vector>

#include "sdpg/rng.hpp"

namespace sdpg::replay {

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminated = false;
  bool truncated = false;
};

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest
/// entry. Sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;
  /// Indices only (positions in insertion order, 0 = oldest).
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

  /// i-th stored item counted from the oldest.
  const Transition& at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::vector<Transition> items_;
};

}  // namespace sdpg::replay
