#pragma once

#include <cstddef>
#include <vector>

#include "rnarl/environment.hpp"
#include "rnarl/losses.hpp"
#include "rnarl/metrics.hpp"
#include "rnarl/mlp.hpp"
#include "rnarl/replay_buffer.hpp"

namespace rnarl {

struct DqnConfig {
  double gamma = 0.9;
  double lr = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // share of training spent annealing
  std::size_t epochs = 200;             // E
  std::size_t collect_steps = 256;      // M
  std::size_t train_iters = 64;         // N
  std::size_t batch_size = 64;
  std::size_t target_sync_interval = 200;
  std::size_t hidden = 64;
  double reward_scale = 1.0;  // applied to rewards before they enter targets
  PerConfig per;
  double beta_start = 0.4;
  double beta_end = 1.0;

  void validate() const;
};

struct QAgent {
  Mlp online;
  Mlp target;
  std::size_t train_steps = 0;

  static QAgent create(Rng& rng, std::size_t length, std::size_t hidden);
};

// Epsilon-greedy over valid flips; greedy ties go to the lowest slot.
FlipAction select_action(const Mlp& qnet, const RnaSequence& s, double epsilon,
                         Rng& rng);

// Greedy action with extra slots excluded (for retry proposals).
FlipAction greedy_action(const Mlp& qnet, const RnaSequence& s,
                         const ActionMask& excluded);

struct EpisodeSummary {
  double best_fitness = 0.0;
  std::size_t length = 0;  // accepted transitions
  DoneReason reason = DoneReason::None;
  bool revisited = false;  // an accepted transition landed on a seen state
};

// Gathers up to config.collect_steps environment steps, starting from a fresh
// random state, and pushes every stored transition to the buffer. Stops early
// when the evaluator's budget runs out.
std::vector<EpisodeSummary> collect_data(Environment& env, const Mlp& qnet,
                                         const DqnConfig& config,
                                         double epsilon,
                                         PrioritizedBuffer& buffer, Rng& rng,
                                         BestTracker* tracker = nullptr);

// One prioritized minibatch update; returns the weighted TD loss.
double train_step(QAgent& agent, PrioritizedBuffer& buffer,
                  const DqnConfig& config, double beta, Rng& rng);

// Fraction of training elapsed, the larger of epoch and budget progress.
double training_progress(std::size_t epoch, std::size_t epochs,
                         const EvalCounter& evaluator);

RunMetrics run_dqn(const DqnConfig& config, const EnvConfig& env_config,
                   EvalCounter& evaluator, std::uint64_t seed,
                   QAgent* trained = nullptr);

}  // namespace rnarl
