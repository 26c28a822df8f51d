#include "rnarl/greedy.hpp"

#include <algorithm>
#include <chrono>

#include "rnarl/errors.hpp"

namespace rnarl {

void GreedyConfig::validate() const {
  if (population < 1) throw ConfigError("population", "must be >= 1");
  if (batch < 1 || batch > population) {
    throw ConfigError("batch", "must satisfy 1 <= batch <= population");
  }
  if (max_iterations < 1) throw ConfigError("max_iterations", "must be >= 1");
  if (mutations < 1) throw ConfigError("mutations", "must be >= 1");
}

RnaSequence mutate(const RnaSequence& s, Rng& rng, std::size_t k) {
  if (k < 1) throw Error("mutate: k must be >= 1");
  std::uniform_int_distribution<std::size_t> position(0, s.size() - 1);
  std::uniform_int_distribution<int> offset(1, 3);
  RnaSequence out = s;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t p = position(rng);
    const int current = static_cast<int>(out[p]);
    const auto target = static_cast<Base>((current + offset(rng)) % 4);
    out = apply_action(out, {p, target});
  }
  return out;
}

IterationStats greedy_iteration(GreedyBuffer& buffer, const GreedyConfig& config,
                                EvalCounter& evaluator, Rng& rng,
                                BestTracker* tracker) {
  IterationStats stats;
  std::vector<std::size_t> picks(buffer.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  const std::size_t n = std::min(config.batch, buffer.size());
  // Partial Fisher-Yates: the first n slots become the sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, picks.size() - 1);
    std::swap(picks[i], picks[pick(rng)]);
  }

  double sum = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    GreedyEntry& entry = buffer[picks[i]];
    if (!evaluator.exhausted()) {
      RnaSequence mutant = mutate(entry.sequence, rng, config.mutations);
      const double f = evaluator.evaluate(mutant);
      ++stats.proposals;
      if (tracker != nullptr) tracker->offer(mutant, f);
      if (f > entry.fitness) {
        entry.sequence = std::move(mutant);
        entry.fitness = f;
        ++stats.accepted;
      }
    }
    sum += entry.fitness;
    stats.batch_max = first ? entry.fitness : std::max(stats.batch_max, entry.fitness);
    first = false;
  }
  stats.batch_avg = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return stats;
}

RunMetrics run_greedy(const GreedyConfig& config, std::size_t length,
                      EvalCounter& evaluator, std::uint64_t seed) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  Rng rng(seed);
  BestTracker tracker;
  RunMetrics metrics;

  GreedyBuffer buffer;
  buffer.reserve(config.population);
  double sum = 0.0;
  double top = 0.0;
  for (std::size_t i = 0; i < config.population; ++i) {
    // A budget smaller than the population truncates it.
    if (i > 0 && evaluator.exhausted()) break;
    RnaSequence s = random_sequence(rng, length);
    const double f = evaluator.evaluate(s);
    tracker.offer(s, f);
    sum += f;
    top = i == 0 ? f : std::max(top, f);
    buffer.push_back({std::move(s), f});
  }
  metrics.rows.push_back({0, tracker.best(),
                          sum / static_cast<double>(buffer.size()), top,
                          evaluator.count()});

  std::size_t stale = 0;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    if (stale >= config.patience || evaluator.exhausted()) break;
    const IterationStats stats =
        greedy_iteration(buffer, config, evaluator, rng, &tracker);
    stale = stats.accepted > 0 ? 0 : stale + 1;
    metrics.env_steps += stats.proposals;
    metrics.rows.push_back({it, tracker.best(), stats.batch_avg,
                            stats.batch_max, evaluator.count()});
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
