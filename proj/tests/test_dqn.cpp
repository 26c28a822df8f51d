#include <set>

#include "doctest.h"
#include "rnarl/dqn.hpp"
#include "rnarl/errors.hpp"
#include "test_support.hpp"

using namespace rnarl;
using rnarl::testing::BaseScoreFitness;

namespace {

const BuiltinFitness kBuiltin;

EnvConfig env_of(std::size_t length, LoopPolicy policy = LoopPolicy::terminate()) {
  EnvConfig e;
  e.length = length;
  e.loop_policy = policy;
  return e;
}

}  // namespace

TEST_CASE("greedy action breaks ties toward the lowest valid slot") {
  Rng rng(1);
  QAgent agent = QAgent::create(rng, 3, 4);
  agent.online.w2.setZero();  // every Q-value is equal
  const RnaSequence s = parse_sequence("AGU");
  CHECK(greedy_action(agent.online, s, {}).slot() == 1);  // slot 0 is a self-flip
  ActionMask excluded(12, false);
  excluded[1] = excluded[2] = true;
  CHECK(greedy_action(agent.online, s, excluded).slot() == 3);
}

TEST_CASE("greedy action follows the largest unmasked Q-value") {
  Rng rng(2);
  QAgent agent = QAgent::create(rng, 2, 4);
  agent.online.w2.setZero();
  agent.online.b2.setZero();
  agent.online.b2[0] = 100.0;  // self-flip slot for a leading A
  agent.online.b2[6] = 5.0;
  const RnaSequence s = parse_sequence("AC");
  CHECK(greedy_action(agent.online, s, {}) == FlipAction{1, Base::G});
}

TEST_CASE("epsilon-greedy never proposes a self-flip and explores uniformly") {
  Rng rng(3);
  QAgent agent = QAgent::create(rng, 4, 8);
  const RnaSequence s = parse_sequence("ACGU");
  std::vector<double> counts(16, 0.0);
  for (int i = 0; i < 12000; ++i) {
    const FlipAction a = select_action(agent.online, s, 1.0, rng);
    CHECK(a.target != s[a.position]);
    counts[a.slot()] += 1.0;
  }
  std::vector<double> valid;
  for (const FlipAction& a : valid_actions(s)) valid.push_back(counts[a.slot()]);
  CHECK(rnarl::testing::chi_square_uniform_p(valid) > 0.001);
  const FlipAction greedy = greedy_action(agent.online, s, {});
  for (int i = 0; i < 100; ++i) CHECK(select_action(agent.online, s, 0.0, rng) == greedy);
}

TEST_CASE("collect_data stores transitions with terminal flags only on loops") {
  Rng rng(4);
  DqnConfig config;
  config.collect_steps = 300;
  EvalCounter counter(kBuiltin);
  Environment env(env_of(3), counter);
  QAgent agent = QAgent::create(rng, 3, 8);
  PrioritizedBuffer buffer;
  BestTracker tracker;
  const auto episodes = collect_data(env, agent.online, config, 1.0, buffer, rng, &tracker);
  CHECK(buffer.size() <= 300);
  CHECK(buffer.size() > 0);
  CHECK_FALSE(episodes.empty());
  std::size_t terminals = 0;
  std::size_t loops = 0;
  for (const auto& e : episodes) loops += e.reason == DoneReason::LoopDetected;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer.at(i);
    terminals += t.done;
    if (!t.done) CHECK(t.s_next == apply_action(t.s, t.a));
    CHECK(t.a.target != t.s[t.a.position]);
  }
  CHECK(terminals == loops);
  CHECK(tracker.has_value());
}

TEST_CASE("collect_data stops when the evaluation budget runs out") {
  Rng rng(5);
  DqnConfig config;
  config.collect_steps = 1000;
  EvalCounter counter(kBuiltin, 25);
  Environment env(env_of(8), counter);
  QAgent agent = QAgent::create(rng, 8, 8);
  PrioritizedBuffer buffer;
  collect_data(env, agent.online, config, 1.0, buffer, rng);
  CHECK(counter.count() == 25);
  CHECK(counter.exhausted());
}

TEST_CASE("target network syncs on the configured interval") {
  Rng rng(6);
  DqnConfig config;
  config.target_sync_interval = 5;
  config.batch_size = 4;
  config.lr = 0.05;
  QAgent agent = QAgent::create(rng, 2, 8);
  PrioritizedBuffer buffer;
  const RnaSequence s = parse_sequence("AC");
  buffer.push({s, {0, Base::G}, parse_sequence("GC"), 1.0, false});
  const Mlp initial = agent.target;
  for (int i = 0; i < 4; ++i) train_step(agent, buffer, config, 0.4, rng);
  CHECK(agent.target.w1 == initial.w1);
  CHECK(agent.online.w1 != initial.w1);
  train_step(agent, buffer, config, 0.4, rng);
  CHECK(agent.train_steps == 5);
  CHECK(agent.target.w2 == agent.online.w2);
}

TEST_CASE("terminal transitions do not bootstrap") {
  Rng rng(7);
  DqnConfig config;
  config.gamma = 0.9;
  config.batch_size = 1;
  config.lr = 0.1;
  QAgent agent = QAgent::create(rng, 1, 8);
  agent.target.b2.setConstant(1000.0);  // a bootstrapped target would be huge
  PrioritizedBuffer buffer;
  const RnaSequence a = parse_sequence("A");
  buffer.push({a, {0, Base::C}, parse_sequence("C"), 0.5, true});
  for (int i = 0; i < 400; ++i) train_step(agent, buffer, config, 1.0, rng);
  const Matrix q = forward(agent.online, encode_row(a));
  CHECK(q(0, 1) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("Q-values converge to one-step rewards for a single position") {
  const BaseScoreFitness fitness({1.0, 2.0, 3.0, 4.0});
  Rng rng(8);
  DqnConfig config;
  config.gamma = 0.0;
  config.batch_size = 32;
  config.lr = 0.05;
  QAgent agent = QAgent::create(rng, 1, 16);
  PrioritizedBuffer buffer;
  for (int rep = 0; rep < 20; ++rep) {
    for (Base from : kAllBases) {
      const RnaSequence s({from});
      for (const FlipAction& a : valid_actions(s)) {
        const RnaSequence next = apply_action(s, a);
        buffer.push({s, a, next, fitness_of(next, fitness), false});
      }
    }
  }
  for (int i = 0; i < 2000; ++i) train_step(agent, buffer, config, 1.0, rng);
  for (Base from : kAllBases) {
    const RnaSequence s({from});
    const Matrix q = forward(agent.online, encode_row(s));
    for (const FlipAction& a : valid_actions(s)) {
      CHECK(std::abs(q(0, a.slot()) - fitness_of(apply_action(s, a), fitness)) < 0.1);
    }
  }
}

TEST_CASE("training progress takes the larger of epoch and budget share") {
  EvalCounter counter(kBuiltin, 100);
  CHECK(training_progress(10, 100, counter) == doctest::Approx(0.1));
  Rng rng(9);
  for (int i = 0; i < 50; ++i) counter.evaluate(random_sequence(rng, 5));
  CHECK(training_progress(10, 100, counter) == doctest::Approx(0.5));
  EvalCounter unlimited(kBuiltin);
  CHECK(training_progress(30, 60, unlimited) == doctest::Approx(0.5));
}

TEST_CASE("run_dqn respects the budget and is reproducible") {
  DqnConfig config;
  config.epochs = 6;
  config.collect_steps = 64;
  config.train_iters = 8;
  config.batch_size = 16;
  auto run = [&](std::uint64_t seed) {
    EvalCounter counter(kBuiltin, 300);
    return run_dqn(config, env_of(10), counter, seed);
  };
  const RunMetrics a = run(11);
  const RunMetrics b = run(11);
  CHECK(a.total_evals <= 300);
  CHECK(a.final_best == b.final_best);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].best_so_far == b.rows[i].best_so_far);
    CHECK(a.rows[i].batch_avg == b.rows[i].batch_avg);
    CHECK(a.rows[i].evals == b.rows[i].evals);
    if (i > 0) {
      CHECK(a.rows[i].best_so_far >= a.rows[i - 1].best_so_far);
      CHECK(a.rows[i].evals >= a.rows[i - 1].evals);
    }
    CHECK(a.rows[i].batch_max <= a.rows[i].best_so_far);
  }
  CHECK(fitness_of(a.best_sequence, kBuiltin) == a.final_best);
  CHECK(a.scatter.size() == a.episode_lengths.size());
}

TEST_CASE("dqn config validation") {
  DqnConfig config;
  config.gamma = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.gamma = 0.9;
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
