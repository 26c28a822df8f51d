#include "rnarl/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rnarl/errors.hpp"

namespace rnarl {

namespace {

Matrix encode_states(const std::vector<RnaSequence>& states,
                     const std::vector<std::size_t>& rows) {
  std::vector<const RnaSequence*> ptrs;
  ptrs.reserve(rows.size());
  for (std::size_t r : rows) ptrs.push_back(&states[r]);
  return encode_batch(ptrs);
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

double mean_kl(const Matrix& old_logits, const Matrix& new_logits,
               const std::vector<ActionMask>& masks) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < old_logits.rows(); ++b) {
    const Vector lp = masked_log_softmax(old_logits.row(b).transpose(), masks[b]);
    const Vector lq = masked_log_softmax(new_logits.row(b).transpose(), masks[b]);
    total += masked_kl(lp, lq, masks[b]);
  }
  return old_logits.rows() == 0 ? 0.0 : total / static_cast<double>(old_logits.rows());
}

}  // namespace

void PpoConfig::validate() const {
  if (!(clip_ratio > 0.0)) throw ConfigError("clip_ratio", "must be > 0");
  if (!(kl_bound > 0.0)) throw ConfigError("kl_bound", "must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in [0, 1]");
  if (minibatch_size < 1) throw ConfigError("minibatch_size", "must be >= 1");
  if (hidden < 1) throw ConfigError("hidden", "must be >= 1");
}

ActorCritic ActorCritic::create(Rng& rng, std::size_t length,
                                std::size_t hidden) {
  ActorCritic ac;
  ac.actor = init_mlp(rng, {kNumBases * length, hidden, kNumBases * length});
  ac.critic = init_mlp(rng, {kNumBases * length, hidden, 1});
  return ac;
}

SampledAction sample_action(const ActorCritic& ac, const RnaSequence& s,
                            Rng& rng) {
  const Matrix logits = forward(ac.actor, encode_row(s));
  const Vector logp = masked_log_softmax(logits.row(0).transpose(), self_flip_mask(s));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  std::size_t chosen = 0;
  // If rounding leaves u above the final cumulative sum, the last valid slot
  // absorbs it.
  for (Eigen::Index i = 0; i < logp.size(); ++i) {
    if (std::isinf(logp[i])) continue;
    chosen = static_cast<std::size_t>(i);
    cumulative += std::exp(logp[i]);
    if (u < cumulative) break;
  }
  return {FlipAction::from_slot(chosen), logp[chosen]};
}

TrajectoryBatch collect_trajectories(Environment& env, const ActorCritic& ac,
                                     const PpoConfig& config, Rng& rng,
                                     BestTracker* tracker) {
  TrajectoryBatch batch;
  EvalCounter& evaluator = env.evaluator();
  const LoopPolicy& policy = env.config().loop_policy;

  while (batch.size() < config.steps_per_batch && !evaluator.exhausted()) {
    env.reset(rng);
    if (tracker != nullptr) {
      tracker->offer(env.state().current, env.state().current_fitness);
    }
    std::size_t accepted = 0;
    DoneReason reason = DoneReason::None;
    const std::size_t episode_start = batch.size();

    while (!env.done() && batch.size() < config.steps_per_batch &&
           !evaluator.exhausted()) {
      const RnaSequence s = env.state().current;
      SampledAction drawn;
      StepOutcome out;
      if (policy.kind == LoopPolicyKind::TryAgain) {
        auto sampler = [&](const RnaSequence& cur) {
          drawn = sample_action(ac, cur, rng);
          return drawn.action;
        };
        out = env.try_step(sampler, policy.max_iter);
      } else {
        drawn = sample_action(ac, s, rng);
        out = env.step(drawn.action);
      }
      if (out.done) reason = out.done_reason;
      const bool store =
          out.accepted || out.done_reason == DoneReason::LoopDetected;
      if (out.accepted) {
        ++accepted;
        if (tracker != nullptr) tracker->offer(out.next, out.next_fitness);
      }
      if (!store) continue;
      batch.states.push_back(s);
      batch.masks.push_back(self_flip_mask(s));
      batch.slots.push_back(drawn.action.slot());
      batch.log_probs.push_back(drawn.log_prob);
      batch.rewards.push_back(out.reward * config.reward_scale);
      batch.segment_end.push_back(false);
    }
    if (batch.size() > episode_start) batch.segment_end.back() = true;
    batch.episode_best.push_back(env.state().episode_best);
    batch.episode_lengths.push_back(accepted);
    batch.episode_reasons.push_back(reason);
  }

  if (!batch.states.empty()) {
    std::vector<std::size_t> rows(batch.size());
    std::iota(rows.begin(), rows.end(), 0);
    const Matrix v = forward(ac.critic, encode_states(batch.states, rows));
    batch.values.assign(v.data(), v.data() + v.rows());
  }
  return batch;
}

void compute_advantages(TrajectoryBatch& batch, double gamma) {
  const std::size_t n = batch.size();
  batch.returns.assign(n, 0.0);
  batch.advantages.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    if (batch.segment_end[k]) running = 0.0;
    running = batch.rewards[k] + gamma * running;
    batch.returns[k] = running;
    batch.advantages[k] = running - batch.values[k];
  }
  if (n > 1) {
    const double mean =
        std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) /
        static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : batch.advantages) {
      a = sd > 1e-12 ? (a - mean) / sd : a - mean;
    }
  }
}

UpdateSummary ppo_update(ActorCritic& ac, const TrajectoryBatch& batch,
                         const PpoConfig& config, Rng& rng) {
  if (batch.size() == 0) throw EmptyBatch();
  config.validate();
  const std::size_t n = batch.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Matrix inputs = encode_states(batch.states, all);
  const Matrix old_logits = forward(ac.actor, inputs);

  UpdateSummary summary;
  std::vector<std::size_t> order = all;
  for (std::size_t epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double clip_sum = 0.0;
    double actor_sum = 0.0;
    double critic_sum = 0.0;
    double entropy_sum = 0.0;
    std::size_t minibatches = 0;
    for (std::size_t start = 0; start < n; start += config.minibatch_size) {
      const std::size_t stop = std::min(n, start + config.minibatch_size);
      const std::vector<std::size_t> rows(order.begin() + start,
                                          order.begin() + stop);
      const Matrix x = encode_states(batch.states, rows);

      ForwardTrace actor_trace;
      const Matrix logits = forward(ac.actor, x, &actor_trace);
      const PolicyLossResult pl = clipped_surrogate_loss(
          logits, gather(batch.masks, rows), gather(batch.slots, rows),
          gather(batch.log_probs, rows), gather(batch.advantages, rows),
          config.clip_ratio, config.entropy_coef);
      sgd_step(ac.actor, backward(ac.actor, actor_trace, pl.grad),
               config.actor_lr);

      ForwardTrace critic_trace;
      const Matrix values = forward(ac.critic, x, &critic_trace);
      const LossResult vl = value_loss(values, gather(batch.returns, rows));
      sgd_step(ac.critic, backward(ac.critic, critic_trace, vl.grad),
               config.critic_lr);

      clip_sum += pl.clip_fraction;
      actor_sum += pl.loss;
      critic_sum += vl.loss;
      entropy_sum += pl.mean_entropy;
      ++minibatches;
    }
    const double m = static_cast<double>(minibatches);
    summary.clip_fraction = clip_sum / m;
    summary.actor_loss = actor_sum / m;
    summary.critic_loss = critic_sum / m;
    summary.entropy = entropy_sum / m;
    summary.epochs_run = epoch + 1;
    summary.mean_kl = mean_kl(old_logits, forward(ac.actor, inputs), batch.masks);
    if (summary.mean_kl > config.kl_bound) break;
  }
  return summary;
}

RunMetrics run_ppo(const PpoConfig& config, const EnvConfig& env_config,
                   EvalCounter& evaluator, std::uint64_t seed) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  Rng rng(seed);
  Environment env(env_config, evaluator);
  ActorCritic ac = ActorCritic::create(rng, env_config.length, config.hidden);
  BestTracker tracker;
  RunMetrics metrics;

  for (std::size_t epoch = 0; epoch < config.epochs && !evaluator.exhausted();
       ++epoch) {
    TrajectoryBatch batch = collect_trajectories(env, ac, config, rng, &tracker);
    double kl = 0.0;
    if (batch.size() > 0) {
      compute_advantages(batch, config.gamma);
      kl = ppo_update(ac, batch, config, rng).mean_kl;
    }
    metrics.epoch_kl.push_back(kl);

    EpochRow row;
    row.epoch = epoch + 1;
    double sum = 0.0;
    for (std::size_t e = 0; e < batch.episode_best.size(); ++e) {
      const double best = batch.episode_best[e];
      sum += best;
      row.batch_max = std::max(row.batch_max, best);
      metrics.scatter.push_back({metrics.scatter.size(), best});
      metrics.episode_lengths.push_back(batch.episode_lengths[e]);
      metrics.env_steps += batch.episode_lengths[e];
    }
    row.batch_avg = batch.episode_best.empty()
                        ? 0.0
                        : sum / static_cast<double>(batch.episode_best.size());
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
  return metrics;
}

}  // namespace rnarl
