#pragma once

#include <cstddef>
#include <vector>

#include "rnarl/sequence.hpp"

namespace rnarl {

struct Transition {
  RnaSequence s;
  FlipAction a;
  RnaSequence s_next;
  double r = 0.0;
  bool done = false;
};

// Complete binary tree over a power-of-two number of leaves; each internal
// node holds the sum (and max) of its children.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves);

  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return sum_[base_ + leaf]; }
  double total() const { return sum_[1]; }
  double max() const { return max_[1]; }
  std::size_t leaves() const { return leaves_; }

  // Leaf whose cumulative-mass interval contains mass, for mass in [0, total).
  std::size_t find(double mass) const;

 private:
  std::size_t leaves_;
  std::size_t base_;
  std::vector<double> sum_;
  std::vector<double> max_;
};

struct PerConfig {
  std::size_t capacity = 50000;
  double alpha = 0.6;     // prioritization exponent
  double epsilon = 1e-3;  // floor added to |td_error|
};

struct SampleBatch {
  std::vector<Transition> transitions;
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // importance weights, max == 1
};

// Proportional prioritized replay with FIFO eviction.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(PerConfig config = {});

  void push(Transition t);
  SampleBatch sample(std::size_t batch_size, double beta, Rng& rng) const;
  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return config_.capacity; }
  bool empty() const { return size_ == 0; }
  const PerConfig& config() const { return config_; }

  // Raw priority p_i (before the alpha exponent).
  double priority(std::size_t index) const { return priorities_[index]; }
  // Prioritized mass p_i^alpha held in the tree.
  double leaf_mass(std::size_t index) const { return tree_.get(index); }
  double total_mass() const { return tree_.total(); }
  const Transition& at(std::size_t index) const { return entries_[index]; }

 private:
  void set_priority(std::size_t index, double p);

  PerConfig config_;
  std::vector<Transition> entries_;
  std::vector<double> priorities_;
  SumTree tree_;
  SumTree raw_;  // raw priorities, for the running max
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

}  // namespace rnarl
