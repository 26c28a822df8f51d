#include "rnarl/dqn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rnarl/errors.hpp"
#include "rnarl/losses.hpp"

namespace rnarl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double linear(double start, double end, double t) {
  return start + (end - start) * std::clamp(t, 0.0, 1.0);
}

FlipAction uniform_action(const RnaSequence& s, const ActionMask& excluded,
                          Rng& rng) {
  std::vector<FlipAction> options;
  options.reserve(3 * s.size());
  for (const FlipAction& a : valid_actions(s)) {
    if (excluded.empty() || !excluded[a.slot()]) options.push_back(a);
  }
  if (options.empty()) options = valid_actions(s);
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

double masked_max(const Eigen::Ref<const Vector>& q, const RnaSequence& s) {
  double best = kNegInf;
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (Base b : kAllBases) {
      if (b == s[p]) continue;
      best = std::max(best, q[FlipAction{p, b}.slot()]);
    }
  }
  return best;
}

}  // namespace

void DqnConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma", "must lie in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw ConfigError("epsilon", "must lie in [0, 1]");
  }
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (target_sync_interval < 1) {
    throw ConfigError("target_sync_interval", "must be >= 1");
  }
  if (hidden < 1) throw ConfigError("hidden", "must be >= 1");
}

QAgent QAgent::create(Rng& rng, std::size_t length, std::size_t hidden) {
  QAgent agent;
  agent.online = init_mlp(rng, {kNumBases * length, hidden, kNumBases * length});
  agent.target = agent.online;
  return agent;
}

FlipAction greedy_action(const Mlp& qnet, const RnaSequence& s,
                         const ActionMask& excluded) {
  const Matrix q = forward(qnet, encode_row(s));
  double best = kNegInf;
  std::size_t best_slot = std::numeric_limits<std::size_t>::max();
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (Base b : kAllBases) {
      if (b == s[p]) continue;
      const std::size_t slot = FlipAction{p, b}.slot();
      if (!excluded.empty() && excluded[slot]) continue;
      if (q(0, slot) > best) {
        best = q(0, slot);
        best_slot = slot;
      }
    }
  }
  if (best_slot == std::numeric_limits<std::size_t>::max()) {
    return greedy_action(qnet, s, {});
  }
  return FlipAction::from_slot(best_slot);
}

FlipAction select_action(const Mlp& qnet, const RnaSequence& s, double epsilon,
                         Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) return uniform_action(s, {}, rng);
  return greedy_action(qnet, s, {});
}

std::vector<EpisodeSummary> collect_data(Environment& env, const Mlp& qnet,
                                         const DqnConfig& config,
                                         double epsilon,
                                         PrioritizedBuffer& buffer, Rng& rng,
                                         BestTracker* tracker) {
  std::vector<EpisodeSummary> summaries;
  EvalCounter& evaluator = env.evaluator();
  const LoopPolicy& policy = env.config().loop_policy;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t steps = 0;

  while (steps < config.collect_steps && !evaluator.exhausted()) {
    env.reset(rng);
    if (tracker != nullptr) {
      tracker->offer(env.state().current, env.state().current_fitness);
    }
    EpisodeSummary summary;
    while (!env.done() && steps < config.collect_steps &&
           !evaluator.exhausted()) {
      const RnaSequence s = env.state().current;
      StepOutcome out;
      FlipAction action;
      if (policy.kind == LoopPolicyKind::TryAgain) {
        // Each retry excludes the slots already rejected this step.
        ActionMask rejected(kNumBases * s.size(), false);
        auto sampler = [&](const RnaSequence& cur) {
          action = unit(rng) < epsilon ? uniform_action(cur, rejected, rng)
                                       : greedy_action(qnet, cur, rejected);
          rejected[action.slot()] = true;
          return action;
        };
        out = env.try_step(sampler, policy.max_iter);
      } else {
        action = select_action(qnet, s, epsilon, rng);
        const bool was_seen =
            env.state().seen.count(apply_action(s, action).str()) > 0;
        out = env.step(action);
        if (out.accepted && was_seen) summary.revisited = true;
      }
      ++steps;
      if (out.accepted) {
        ++summary.length;
        if (tracker != nullptr) tracker->offer(out.next, out.next_fitness);
      }
      // A loop-terminating step is stored so the agent learns its cost.
      if (out.accepted || out.done_reason == DoneReason::LoopDetected) {
        const bool terminal = out.done_reason == DoneReason::LoopDetected;
        buffer.push({s, action, out.next, out.reward * config.reward_scale,
                     terminal});
      }
      if (out.done) summary.reason = out.done_reason;
    }
    summary.best_fitness = env.state().episode_best;
    summaries.push_back(summary);
  }
  return summaries;
}

double train_step(QAgent& agent, PrioritizedBuffer& buffer,
                  const DqnConfig& config, double beta, Rng& rng) {
  SampleBatch batch = buffer.sample(config.batch_size, beta, rng);
  const std::size_t n = batch.transitions.size();
  std::vector<const RnaSequence*> states;
  std::vector<const RnaSequence*> next_states;
  std::vector<std::size_t> slots;
  states.reserve(n);
  next_states.reserve(n);
  slots.reserve(n);
  for (const Transition& t : batch.transitions) {
    states.push_back(&t.s);
    next_states.push_back(&t.s_next);
    slots.push_back(t.a.slot());
  }

  ForwardTrace trace;
  const Matrix q = forward(agent.online, encode_batch(states), &trace);
  const Matrix q_next = forward(agent.target, encode_batch(next_states));

  std::vector<double> targets(n);
  std::vector<double> td(n);
  for (std::size_t b = 0; b < n; ++b) {
    const Transition& t = batch.transitions[b];
    double y = t.r;
    if (!t.done && config.gamma > 0.0) {
      y += config.gamma * masked_max(q_next.row(b).transpose(), t.s_next);
    }
    targets[b] = y;
    td[b] = y - q(b, slots[b]);
  }
  const LossResult loss = td_loss(q, slots, targets, batch.weights);
  sgd_step(agent.online, backward(agent.online, trace, loss.grad), config.lr);
  buffer.update_priorities(batch.indices, td);

  ++agent.train_steps;
  if (agent.train_steps % config.target_sync_interval == 0) {
    agent.target = agent.online;
  }
  return loss.loss;
}

double training_progress(std::size_t epoch, std::size_t epochs,
                         const EvalCounter& evaluator) {
  double t = epochs == 0 ? 1.0
                         : static_cast<double>(epoch) / static_cast<double>(epochs);
  if (evaluator.limit() != EvalCounter::kUnlimited && evaluator.limit() > 0) {
    t = std::max(t, static_cast<double>(evaluator.count()) /
                        static_cast<double>(evaluator.limit()));
  }
  return t;
}

RunMetrics run_dqn(const DqnConfig& config, const EnvConfig& env_config,
                   EvalCounter& evaluator, std::uint64_t seed,
                   QAgent* trained) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  Rng rng(seed);
  Environment env(env_config, evaluator);
  QAgent agent = QAgent::create(rng, env_config.length, config.hidden);
  PrioritizedBuffer buffer(config.per);
  BestTracker tracker;
  RunMetrics metrics;

  for (std::size_t epoch = 0; epoch < config.epochs && !evaluator.exhausted();
       ++epoch) {
    const double t = training_progress(epoch, config.epochs, evaluator);
    const double decay = std::max(config.epsilon_decay_fraction, 1e-12);
    const double epsilon =
        linear(config.epsilon_start, config.epsilon_end, t / decay);
    const double beta = linear(config.beta_start, config.beta_end, t);

    const auto episodes =
        collect_data(env, agent.online, config, epsilon, buffer, rng, &tracker);
    if (!buffer.empty()) {
      for (std::size_t j = 0; j < config.train_iters; ++j) {
        train_step(agent, buffer, config, beta, rng);
      }
    }

    EpochRow row;
    row.epoch = epoch + 1;
    double sum = 0.0;
    for (const auto& e : episodes) {
      sum += e.best_fitness;
      row.batch_max = std::max(row.batch_max, e.best_fitness);
      metrics.episode_lengths.push_back(e.length);
      metrics.scatter.push_back({metrics.scatter.size(), e.best_fitness});
      metrics.env_steps += e.length;
    }
    row.batch_avg = episodes.empty() ? 0.0 : sum / static_cast<double>(episodes.size());
    row.best_so_far = tracker.best();
    row.evals = evaluator.count();
    metrics.rows.push_back(row);
  }

  metrics.final_best = tracker.best();
  metrics.best_sequence = tracker.sequence();
  metrics.total_evals = evaluator.count();
  metrics.wall_time_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  if (trained != nullptr) *trained = std::move(agent);
  return metrics;
}

}  // namespace rnarl
