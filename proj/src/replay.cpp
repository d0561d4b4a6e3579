#include "sdpg/replay.hpp"

#include "sdpg/error.hpp"

namespace sdpg::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay buffer index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return items_[(oldest + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (size_ == 0) throw UsageError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch);
  for (auto i : sample_indices(batch, rng)) out.push_back(at(i));
  return out;
}

}  // namespace sdpg::replay
