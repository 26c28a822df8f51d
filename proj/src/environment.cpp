#include "rnarl/environment.hpp"

#include <algorithm>

#include "rnarl/errors.hpp"

namespace rnarl {

void LoopPolicy::validate() const {
  if (kind == LoopPolicyKind::TryAgain && max_iter < 1) {
    throw ConfigError("max_iter", "must be >= 1");
  }
  if (kind == LoopPolicyKind::RewardPenalty && !(alpha_penalty >= 0.0)) {
    throw ConfigError("alpha_penalty", "must be >= 0");
  }
}

std::string to_string(LoopPolicyKind kind) {
  switch (kind) {
    case LoopPolicyKind::Terminate: return "terminate";
    case LoopPolicyKind::TryAgain: return "try-again";
    case LoopPolicyKind::RewardPenalty: return "reward-penalty";
  }
  return "unknown";
}

LoopPolicyKind loop_policy_from_string(const std::string& name) {
  if (name == "terminate") return LoopPolicyKind::Terminate;
  if (name == "try-again") return LoopPolicyKind::TryAgain;
  if (name == "reward-penalty") return LoopPolicyKind::RewardPenalty;
  throw ConfigError("loop_policy", "unknown policy '" + name + "'");
}

void EnvConfig::validate() const {
  if (length < 1) throw ConfigError("len", "must be >= 1");
  loop_policy.validate();
}

std::string to_string(DoneReason reason) {
  switch (reason) {
    case DoneReason::None: return "none";
    case DoneReason::LoopDetected: return "loop_detected";
    case DoneReason::BudgetExhausted: return "budget_exhausted";
    case DoneReason::MaxSteps: return "max_steps";
  }
  return "unknown";
}

Environment::Environment(EnvConfig config, EvalCounter& evaluator)
    : config_(config), evaluator_(&evaluator) {
  config_.validate();
  state_.done = true;
}

const EnvState& Environment::reset(Rng& rng) {
  return reset_to(random_sequence(rng, config_.length));
}

const EnvState& Environment::reset_to(const RnaSequence& start) {
  if (start.size() != config_.length) {
    throw LengthMismatch("start sequence length " + std::to_string(start.size()) +
                         " != configured length " +
                         std::to_string(config_.length));
  }
  state_ = EnvState{};
  state_.current = start;
  const double f = evaluator_->evaluate(start);
  state_.seen.emplace(start.str(), SeenEntry{1, f});
  state_.current_fitness = f;
  state_.episode_best = f;
  return state_;
}

double Environment::fitness_for(const RnaSequence& s, const SeenEntry* entry) {
  return entry != nullptr ? entry->fitness : evaluator_->evaluate(s);
}

StepOutcome Environment::accept(RnaSequence next, const std::string& key,
                                double reward, double fitness) {
  auto& entry = state_.seen[key];
  entry.visits += 1;
  entry.fitness = fitness;
  state_.current = next;
  state_.current_fitness = fitness;
  state_.steps_taken += 1;
  state_.episode_best = std::max(state_.episode_best, fitness);

  StepOutcome out;
  out.next = std::move(next);
  out.reward = reward;
  out.next_fitness = fitness;
  out.next_visits = entry.visits;
  if (state_.steps_taken >= config_.effective_max_steps()) {
    state_.done = true;
    out.done = true;
    out.done_reason = DoneReason::MaxSteps;
  }
  return out;
}

StepOutcome Environment::step(const FlipAction& action) {
  if (state_.done) throw EpisodeFinished();
  RnaSequence next = apply_action(state_.current, action);
  const std::string key = next.str();
  const auto it = state_.seen.find(key);
  const SeenEntry* prior = it == state_.seen.end() ? nullptr : &it->second;

  switch (config_.loop_policy.kind) {
    case LoopPolicyKind::Terminate: {
      if (prior != nullptr) {
        StepOutcome out;
        out.next = std::move(next);
        out.reward = 0.0;
        out.done = true;
        out.done_reason = DoneReason::LoopDetected;
        out.accepted = false;
        out.next_fitness = prior->fitness;
        out.next_visits = prior->visits;
        state_.done = true;
        return out;
      }
      const double f = fitness_for(next, nullptr);
      return accept(std::move(next), key, f, f);
    }
    case LoopPolicyKind::RewardPenalty: {
      const std::uint64_t visits = prior != nullptr ? prior->visits : 0;
      const double f = fitness_for(next, prior);
      const double reward =
          f - config_.loop_policy.alpha_penalty * static_cast<double>(visits);
      return accept(std::move(next), key, reward, f);
    }
    case LoopPolicyKind::TryAgain: {
      if (prior != nullptr) {
        StepOutcome out;
        out.next = std::move(next);
        out.accepted = false;
        out.next_fitness = prior->fitness;
        out.next_visits = prior->visits;
        return out;
      }
      const double f = fitness_for(next, nullptr);
      return accept(std::move(next), key, f, f);
    }
  }
  throw Error("unreachable loop policy");
}

StepOutcome Environment::try_step(const ActionSampler& sampler,
                                  std::size_t max_iter) {
  if (state_.done) throw EpisodeFinished();
  if (max_iter < 1) throw ConfigError("max_iter", "must be >= 1");
  StepOutcome last;
  for (std::size_t attempt = 0; attempt < max_iter; ++attempt) {
    const FlipAction action = sampler(state_.current);
    RnaSequence next = apply_action(state_.current, action);
    const std::string key = next.str();
    const auto it = state_.seen.find(key);
    if (it == state_.seen.end()) {
      const double f = fitness_for(next, nullptr);
      return accept(std::move(next), key, f, f);
    }
    last.next = std::move(next);
    last.next_fitness = it->second.fitness;
    last.next_visits = it->second.visits;
  }
  state_.seen.clear();
  state_.done = true;
  last.reward = 0.0;
  last.done = true;
  last.done_reason = DoneReason::BudgetExhausted;
  last.accepted = false;
  return last;
}

}  // namespace rnarl
