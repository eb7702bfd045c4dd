#include "decorl/replay.hpp"

#include <string>
#include <utility>

#include "decorl/errors.hpp"

namespace decorl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
  storage_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (size_ < capacity_) {
    storage_.push_back(std::move(t));
    ++size_;
  } else {
    storage_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t k, Rng& rng) const {
  if (size_ < k) {
    throw NotReadyError("ReplayBuffer: have " + std::to_string(size_) +
                        " transitions, need " + std::to_string(k));
  }
  std::vector<const Transition*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(&storage_[rng.uniform_int(size_)]);
  }
  return out;
}

const Transition& ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw UsageError("ReplayBuffer::at: index out of range");
  if (size_ < capacity_) return storage_[index];
  return storage_[(cursor_ + index) % capacity_];
}

}  // namespace decorl
