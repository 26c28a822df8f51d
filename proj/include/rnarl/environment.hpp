#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>

#include "rnarl/fitness.hpp"
#include "rnarl/sequence.hpp"

namespace rnarl {

enum class LoopPolicyKind { Terminate, TryAgain, RewardPenalty };

struct LoopPolicy {
  LoopPolicyKind kind = LoopPolicyKind::Terminate;
  std::size_t max_iter = 8;     // TryAgain only, >= 1
  double alpha_penalty = 0.1;   // RewardPenalty only, >= 0

  static LoopPolicy terminate() { return {}; }
  static LoopPolicy try_again(std::size_t max_iter) {
    return {LoopPolicyKind::TryAgain, max_iter, 0.1};
  }
  static LoopPolicy reward_penalty(double alpha) {
    return {LoopPolicyKind::RewardPenalty, 8, alpha};
  }

  void validate() const;
};

std::string to_string(LoopPolicyKind kind);
LoopPolicyKind loop_policy_from_string(const std::string& name);

struct EnvConfig {
  std::size_t length = 20;
  std::size_t max_steps = 0;  // 0 means 2 * length
  LoopPolicy loop_policy;

  std::size_t effective_max_steps() const {
    return max_steps == 0 ? 2 * length : max_steps;
  }
  void validate() const;
};

struct SeenEntry {
  std::uint64_t visits = 0;
  double fitness = 0.0;
};

struct EnvState {
  RnaSequence current;
  // Keyed by exact sequence text. Fitness is cached per entry so revisits do
  // not spend evaluations.
  std::unordered_map<std::string, SeenEntry> seen;
  std::size_t steps_taken = 0;
  double episode_best = 0.0;
  double current_fitness = 0.0;
  bool done = false;
};

enum class DoneReason { None, LoopDetected, BudgetExhausted, MaxSteps };

std::string to_string(DoneReason reason);

struct StepOutcome {
  RnaSequence next;
  double reward = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
  // False when the step did not move: a seen state under Terminate or
  // TryAgain.
  bool accepted = true;
  double next_fitness = 0.0;
  std::uint64_t next_visits = 0;
};

using ActionSampler = std::function<FlipAction(const RnaSequence&)>;

class Environment {
 public:
  Environment(EnvConfig config, EvalCounter& evaluator);

  const EnvState& reset(Rng& rng);
  const EnvState& reset_to(const RnaSequence& start);

  StepOutcome step(const FlipAction& action);

  // Draws up to max_iter proposals, accepting the first unseen successor.
  // When every draw is seen the episode ends with BudgetExhausted and the seen
  // set is cleared.
  StepOutcome try_step(const ActionSampler& sampler, std::size_t max_iter);

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  bool done() const { return state_.done; }
  EvalCounter& evaluator() { return *evaluator_; }

 private:
  double fitness_for(const RnaSequence& s, const SeenEntry* entry);
  StepOutcome accept(RnaSequence next, const std::string& key, double reward,
                     double fitness);

  EnvConfig config_;
  EvalCounter* evaluator_;
  EnvState state_;
};

}  // namespace rnarl
