#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rnarl/sequence.hpp"

namespace rnarl {

struct EpochRow {
  std::size_t epoch = 0;
  double best_so_far = 0.0;
  double batch_avg = 0.0;   // mean episode-best (greedy: mean of the batch)
  double batch_max = 0.0;
  std::uint64_t evals = 0;  // cumulative fitness evaluations
};

struct ScatterPoint {
  std::size_t episode = 0;
  double best_fitness = 0.0;
};

struct RunMetrics {
  std::vector<EpochRow> rows;
  std::vector<ScatterPoint> scatter;         // one per completed episode
  std::vector<std::size_t> episode_lengths;  // accepted steps per episode
  std::vector<double> epoch_kl;              // PPO only
  double final_best = 0.0;
  RnaSequence best_sequence;
  std::uint64_t total_evals = 0;
  std::uint64_t env_steps = 0;
  double wall_time_s = 0.0;
};

// Running maximum over every evaluated sequence.
class BestTracker {
 public:
  void offer(const RnaSequence& s, double fitness) {
    if (!seen_any_ || fitness > best_) {
      best_ = fitness;
      sequence_ = s;
      seen_any_ = true;
    }
  }
  bool has_value() const { return seen_any_; }
  double best() const { return best_; }
  const RnaSequence& sequence() const { return sequence_; }

 private:
  bool seen_any_ = false;
  double best_ = 0.0;
  RnaSequence sequence_;
};

}  // namespace rnarl
