#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rnarl/fitness.hpp"
#include "rnarl/metrics.hpp"

namespace rnarl {

struct GreedyConfig {
  std::size_t population = 100;  // N
  std::size_t batch = 32;        // n, sampled per iteration
  std::size_t max_iterations = 1000;  // M
  std::size_t mutations = 1;
  // Stop after this many consecutive iterations in which no mutant was kept.
  std::size_t patience = 50;

  void validate() const;
};

struct GreedyEntry {
  RnaSequence sequence;
  double fitness = 0.0;
};

using GreedyBuffer = std::vector<GreedyEntry>;

// k sequential random flips, each to one of the three other bases.
RnaSequence mutate(const RnaSequence& s, Rng& rng, std::size_t k);

struct IterationStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  double batch_avg = 0.0;
  double batch_max = 0.0;
};

// Samples n entries without replacement and replaces each by its mutant only
// when the mutant is strictly fitter. Proposals stop once the evaluator's
// budget is spent.
IterationStats greedy_iteration(GreedyBuffer& buffer, const GreedyConfig& config,
                                EvalCounter& evaluator, Rng& rng,
                                BestTracker* tracker = nullptr);

// Row 0 describes the initial population; each later row one iteration.
RunMetrics run_greedy(const GreedyConfig& config, std::size_t length,
                      EvalCounter& evaluator, std::uint64_t seed);

}  // namespace rnarl
