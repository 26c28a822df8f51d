#include <array>
#include <map>
#include <set>

#include "doctest.h"
#include "rnarl/environment.hpp"
#include "rnarl/errors.hpp"
#include "test_support.hpp"

using namespace rnarl;

namespace {

const BuiltinFitness kBuiltin;

EnvConfig config_with(LoopPolicy policy, std::size_t length = 6,
                      std::size_t max_steps = 0) {
  EnvConfig c;
  c.length = length;
  c.max_steps = max_steps;
  c.loop_policy = policy;
  return c;
}

}  // namespace

TEST_CASE("reset draws a seeded start and seeds the seen set") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::terminate(), 12), counter);
  Rng a(9);
  Rng b(9);
  const RnaSequence first = env.reset(a).current;
  CHECK(env.reset(b).current == first);
  CHECK(env.state().seen.size() == 1);
  CHECK(env.state().seen.at(first.str()).visits == 1);
  CHECK(env.state().episode_best == fitness_of(first, kBuiltin));
  CHECK(env.state().steps_taken == 0);
  CHECK_FALSE(env.done());
}

TEST_CASE("step before reset or after done is an error") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::terminate(), 1), counter);
  CHECK_THROWS_AS(env.step({0, Base::C}), EpisodeFinished);
  env.reset_to(parse_sequence("A"));
  env.step({0, Base::C});
  env.step({0, Base::A});  // loop
  CHECK(env.done());
  CHECK_THROWS_AS(env.step({0, Base::G}), EpisodeFinished);
}

TEST_CASE("unseen successor is accepted with its fitness as reward") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::terminate(), 9), counter);
  env.reset_to(parse_sequence("GGGAAACCA"));
  const auto out = env.step({8, Base::C});
  CHECK_FALSE(out.done);
  CHECK(out.accepted);
  CHECK(out.next.str() == "GGGAAACCC");
  CHECK(out.reward == fitness_of(out.next, kBuiltin));
  CHECK(out.reward == 9.0);
  CHECK(env.state().episode_best == 9.0);
  CHECK(env.state().steps_taken == 1);
}

TEST_CASE("terminate ends the episode on a revisit with zero reward") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::terminate(), 9), counter);
  env.reset_to(parse_sequence("GGGAAACCC"));
  env.step({0, Base::A});
  const std::uint64_t evals = counter.count();
  const auto out = env.step({0, Base::G});
  CHECK(out.done);
  CHECK(out.done_reason == DoneReason::LoopDetected);
  CHECK_FALSE(out.accepted);
  CHECK(out.reward == 0.0);
  CHECK(env.state().current.str() == "AGGAAACCC");
  CHECK(counter.count() == evals);  // fitness of a seen state is cached
}

TEST_CASE("reward penalty subtracts alpha per prior visit") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::reward_penalty(0.1), 9), counter);
  env.reset_to(parse_sequence("GGGAAACCC"));
  env.step({0, Base::A});
  const auto back = env.step({0, Base::G});
  CHECK_FALSE(back.done);
  CHECK(back.reward == 9.0 - 0.1 * 1);
  CHECK(back.next_visits == 2);
  env.step({0, Base::A});
  const auto again = env.step({0, Base::G});
  CHECK(again.reward == 9.0 - 0.1 * 2);
}

TEST_CASE("try-again step reports seen proposals without moving") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::try_again(5), 4), counter);
  env.reset_to(parse_sequence("AAAA"));
  env.step({0, Base::C});
  const auto rejected = env.step({0, Base::A});
  CHECK_FALSE(rejected.accepted);
  CHECK_FALSE(rejected.done);
  CHECK(env.state().current.str() == "CAAA");
  CHECK(env.state().steps_taken == 1);
}

TEST_CASE("try_step retries until an unseen successor") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::try_again(5), 4), counter);
  env.reset_to(parse_sequence("AAAA"));
  env.step({0, Base::C});
  int draws = 0;
  const auto out = env.try_step(
      [&](const RnaSequence&) {
        ++draws;
        return draws == 1 ? FlipAction{0, Base::A} : FlipAction{1, Base::G};
      },
      5);
  CHECK(draws == 2);
  CHECK(out.accepted);
  CHECK(out.next.str() == "CGAA");
  CHECK(env.state().steps_taken == 2);
}

TEST_CASE("try_step exhausts its retries when every successor is seen") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::try_again(10), 1, 10), counter);
  env.reset_to(parse_sequence("A"));
  env.step({0, Base::C});
  env.step({0, Base::G});
  env.step({0, Base::U});
  // From U, every successor (A, C, G) is already in the seen set.
  int draws = 0;
  std::size_t next = 0;
  const std::array<Base, 3> targets{Base::A, Base::C, Base::G};
  const auto out = env.try_step(
      [&](const RnaSequence&) {
        ++draws;
        return FlipAction{0, targets[next++ % 3]};
      },
      10);
  CHECK(draws == 10);
  CHECK(out.done);
  CHECK(out.done_reason == DoneReason::BudgetExhausted);
  CHECK(out.reward == 0.0);
  CHECK(env.state().seen.empty());
}

TEST_CASE("max_iter = 1 ends like terminate on a seen first draw") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::try_again(1), 3), counter);
  env.reset_to(parse_sequence("AAA"));
  env.step({0, Base::C});
  const auto out =
      env.try_step([](const RnaSequence&) { return FlipAction{0, Base::A}; }, 1);
  CHECK(out.done);
  CHECK(out.reward == 0.0);
  CHECK(env.state().current.str() == "CAA");
}

TEST_CASE("episodes stop at max_steps") {
  EvalCounter counter(kBuiltin);
  Environment env(config_with(LoopPolicy::reward_penalty(0.1), 3, 2), counter);
  env.reset_to(parse_sequence("AAA"));
  CHECK_FALSE(env.step({0, Base::C}).done);
  const auto out = env.step({1, Base::C});
  CHECK(out.done);
  CHECK(out.done_reason == DoneReason::MaxSteps);
  CHECK(EnvConfig{5, 0, {}}.effective_max_steps() == 10);
}

TEST_CASE("invalid loop policy parameters are rejected") {
  EvalCounter counter(kBuiltin);
  CHECK_THROWS_AS(Environment(config_with(LoopPolicy::try_again(0)), counter),
                  ConfigError);
  CHECK_THROWS_AS(Environment(config_with(LoopPolicy::reward_penalty(-1.0)), counter),
                  ConfigError);
  CHECK(loop_policy_from_string("try-again") == LoopPolicyKind::TryAgain);
  CHECK_THROWS_AS(loop_policy_from_string("retry"), ConfigError);
}

TEST_CASE("random episodes respect the loop-policy invariants") {
  Rng rng(77);
  for (auto kind : {LoopPolicyKind::Terminate, LoopPolicyKind::TryAgain,
                    LoopPolicyKind::RewardPenalty}) {
    CAPTURE(to_string(kind));
    for (int episode = 0; episode < 300; ++episode) {
      EvalCounter counter(kBuiltin);
      Environment env(config_with({kind, 4, 0.1}, 2 + episode % 4), counter);
      env.reset(rng);
      std::set<std::string> visited{env.state().current.str()};
      std::map<std::string, int> visits{{env.state().current.str(), 1}};
      double best = env.state().episode_best;
      std::size_t accepted = 0;
      while (!env.done()) {
        const RnaSequence before = env.state().current;
        auto pick = [&](const RnaSequence& s) {
          const auto actions = valid_actions(s);
          std::uniform_int_distribution<std::size_t> d(0, actions.size() - 1);
          return actions[d(rng)];
        };
        StepOutcome out;
        if (kind == LoopPolicyKind::TryAgain) {
          out = env.try_step(pick, 4);
        } else {
          out = env.step(pick(before));
        }
        if (out.accepted) {
          ++accepted;
          const std::string key = out.next.str();
          std::size_t diffs = 0;
          for (std::size_t i = 0; i < before.size(); ++i) diffs += before[i] != out.next[i];
          CHECK(diffs == 1);
          if (kind != LoopPolicyKind::RewardPenalty) {
            CHECK(visited.count(key) == 0);
          } else {
            const double f = fitness_of(out.next, kBuiltin);
            CHECK(out.reward == f - 0.1 * visits[key]);
          }
          visited.insert(key);
          visits[key] += 1;
          CHECK(env.state().episode_best >= best);
          best = env.state().episode_best;
          if (kind == LoopPolicyKind::TryAgain && !env.done()) {
            CHECK(env.state().seen.size() == 1 + accepted);
          }
        }
        CHECK(out.done == (out.done_reason != DoneReason::None));
      }
    }
  }
}
