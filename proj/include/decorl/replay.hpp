#pragma once

#include <cstddef>
#include <vector>

#include "decorl/rng.hpp"

namespace decorl {

struct Transition {
  std::vector<double> s;
  std::size_t a = 0;
  double r = 0.0;  // clipped to {-1, 0, 1} by the agent before storage
  std::vector<double> s_next;
  bool terminal = false;
};

// Fixed-capacity FIFO ring with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  // k uniform draws with replacement; throws NotReadyError while size < k.
  std::vector<const Transition*> sample(std::size_t k, Rng& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // Index 0 is the oldest retained transition.
  const Transition& at(std::size_t index) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
};

}  // namespace decorl
