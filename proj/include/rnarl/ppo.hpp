#pragma once

#include <cstddef>
#include <vector>

#include "rnarl/environment.hpp"
#include "rnarl/losses.hpp"
#include "rnarl/metrics.hpp"
#include "rnarl/mlp.hpp"

namespace rnarl {

struct PpoConfig {
  double gamma = 0.9;
  double clip_ratio = 0.2;
  double kl_bound = 0.02;  // early-stop threshold on mean KL(old || new)
  double actor_lr = 1e-2;
  double critic_lr = 1e-3;
  std::size_t epochs = 200;           // E
  std::size_t steps_per_batch = 256;  // M
  std::size_t update_epochs = 4;
  std::size_t minibatch_size = 64;
  double entropy_coef = 0.01;
  std::size_t hidden = 64;
  double reward_scale = 1.0;

  void validate() const;
};

struct ActorCritic {
  Mlp actor;   // 4L -> 4L logits
  Mlp critic;  // 4L -> 1

  static ActorCritic create(Rng& rng, std::size_t length, std::size_t hidden);
};

struct SampledAction {
  FlipAction action;
  double log_prob = 0.0;
};

// Categorical draw from the masked softmax of the actor's logits.
SampledAction sample_action(const ActorCritic& ac, const RnaSequence& s,
                            Rng& rng);

struct TrajectoryBatch {
  std::vector<RnaSequence> states;
  std::vector<ActionMask> masks;
  std::vector<std::size_t> slots;
  std::vector<double> log_probs;  // behavior policy, at sampling time
  std::vector<double> rewards;
  std::vector<double> values;
  // True on the last stored transition of each episode segment (terminal or
  // truncated); returns never bootstrap across these.
  std::vector<bool> segment_end;
  std::vector<double> returns;
  std::vector<double> advantages;

  // Episode-level bookkeeping for metrics.
  std::vector<double> episode_best;
  std::vector<std::size_t> episode_lengths;
  std::vector<DoneReason> episode_reasons;

  std::size_t size() const { return states.size(); }
};

// Gathers up to config.steps_per_batch stored transitions. Under TryAgain the
// rejected proposals are discarded; under Terminate the loop-closing step is
// stored with reward 0.
TrajectoryBatch collect_trajectories(Environment& env, const ActorCritic& ac,
                                     const PpoConfig& config, Rng& rng,
                                     BestTracker* tracker = nullptr);

// Fills returns (discounted per segment) and batch-normalized advantages.
void compute_advantages(TrajectoryBatch& batch, double gamma);

struct UpdateSummary {
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  std::size_t epochs_run = 0;
};

// Clipped-surrogate update with KL early stopping: after each epoch the mean
// KL(old || new) is measured, and once it exceeds kl_bound that epoch's update
// is kept and no further epochs run.
UpdateSummary ppo_update(ActorCritic& ac, const TrajectoryBatch& batch,
                         const PpoConfig& config, Rng& rng);

RunMetrics run_ppo(const PpoConfig& config, const EnvConfig& env_config,
                   EvalCounter& evaluator, std::uint64_t seed);

}  // namespace rnarl
