#include "doctest.h"
#include "rnarl/errors.hpp"
#include "rnarl/greedy.hpp"
#include "test_support.hpp"

using namespace rnarl;

namespace {

const BuiltinFitness kBuiltin;

std::size_t hamming(const RnaSequence& a, const RnaSequence& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

TEST_CASE("single mutations change exactly one base to a uniform other base") {
  Rng rng(1);
  const RnaSequence s = parse_sequence("AAAAAAAA");
  std::vector<double> targets(3, 0.0);
  std::vector<double> positions(8, 0.0);
  for (int i = 0; i < 9000; ++i) {
    const RnaSequence m = mutate(s, rng, 1);
    REQUIRE(hamming(s, m) == 1);
    for (std::size_t p = 0; p < 8; ++p) {
      if (m[p] != s[p]) {
        positions[p] += 1.0;
        targets[static_cast<std::size_t>(m[p]) - 1] += 1.0;
      }
    }
  }
  CHECK(rnarl::testing::chi_square_uniform_p(targets) > 0.001);
  CHECK(rnarl::testing::chi_square_uniform_p(positions) > 0.001);
}

TEST_CASE("k mutations move at most k positions") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const RnaSequence s = random_sequence(rng, 12);
    const RnaSequence m = mutate(s, rng, 3);
    CHECK(hamming(s, m) <= 3);
    CHECK(hamming(s, m) >= 1);
  }
  CHECK_THROWS_AS(mutate(parse_sequence("AC"), rng, 0), Error);
}

TEST_CASE("an iteration only replaces entries with strictly fitter mutants") {
  Rng rng(3);
  GreedyConfig config;
  config.population = 20;
  config.batch = 8;
  EvalCounter counter(kBuiltin);
  GreedyBuffer buffer;
  for (std::size_t i = 0; i < config.population; ++i) {
    RnaSequence s = random_sequence(rng, 10);
    const double f = counter.evaluate(s);
    buffer.push_back({std::move(s), f});
  }
  for (int round = 0; round < 50; ++round) {
    const GreedyBuffer before = buffer;
    const std::uint64_t evals = counter.count();
    const IterationStats stats = greedy_iteration(buffer, config, counter, rng);
    CHECK(stats.proposals == 8);
    CHECK(counter.count() == evals + 8);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      CHECK(buffer[i].fitness >= before[i].fitness);
      CHECK(buffer[i].fitness == fitness_of(buffer[i].sequence, kBuiltin));
      if (!(buffer[i].sequence == before[i].sequence)) {
        ++changed;
        CHECK(buffer[i].fitness > before[i].fitness);
        CHECK(hamming(buffer[i].sequence, before[i].sequence) == 1);
      }
    }
    CHECK(changed == stats.accepted);
    CHECK(changed <= 8);
    CHECK(stats.batch_max >= stats.batch_avg);
  }
}

TEST_CASE("run_greedy records the initial population and stops on patience") {
  GreedyConfig config;
  config.population = 10;
  config.batch = 5;
  config.patience = 3;
  config.max_iterations = 10000;
  EvalCounter counter(kBuiltin);
  const RunMetrics m = run_greedy(config, 6, counter, 4);
  REQUIRE(m.rows.size() >= 2);
  CHECK(m.rows[0].epoch == 0);
  CHECK(m.rows[0].evals == 10);
  CHECK(m.rows.size() < 10001);
  for (std::size_t i = 1; i < m.rows.size(); ++i) {
    CHECK(m.rows[i].best_so_far >= m.rows[i - 1].best_so_far);
    CHECK(m.rows[i].evals == m.rows[i - 1].evals + 5);
  }
  CHECK(m.final_best == fitness_of(m.best_sequence, kBuiltin));
}

TEST_CASE("run_greedy honors the evaluation budget and is reproducible") {
  GreedyConfig config;
  auto run = [&](std::uint64_t seed, std::uint64_t budget) {
    EvalCounter counter(kBuiltin, budget);
    return run_greedy(config, 20, counter, seed);
  };
  const RunMetrics a = run(9, 1000);
  const RunMetrics b = run(9, 1000);
  CHECK(a.total_evals == 1000);
  CHECK(a.final_best == b.final_best);
  CHECK(a.best_sequence == b.best_sequence);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].batch_avg == b.rows[i].batch_avg);
  }
  CHECK(run(9, 40).total_evals == 40);
}

TEST_CASE("greedy config validation") {
  GreedyConfig config;
  config.batch = 101;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.batch = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
