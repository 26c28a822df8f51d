#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rnarl/dqn.hpp"
#include "rnarl/environment.hpp"
#include "rnarl/fitness.hpp"
#include "rnarl/greedy.hpp"
#include "rnarl/metrics.hpp"
#include "rnarl/ppo.hpp"

namespace rnarl {

enum class Algorithm { Dqn, Ppo, Greedy };

std::string to_string(Algorithm algo);
Algorithm algorithm_from_string(const std::string& name);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Dqn;
  std::size_t length = 20;
  std::vector<std::uint64_t> seeds{0};
  std::string fitness = "builtin";  // builtin | external
  std::string external_cmd;
  // Unset means the algorithm's default: terminate for DQN, try-again for PPO.
  std::optional<LoopPolicyKind> loop_policy;
  std::size_t max_iter = 8;
  double alpha_penalty = 0.1;
  std::size_t max_steps = 0;  // 0 means 2 * length
  std::uint64_t budget = 30000;
  std::filesystem::path out = "results";
  bool parallel = false;

  DqnConfig dqn;
  PpoConfig ppo;
  GreedyConfig greedy;

  void validate() const;
  EnvConfig env_config() const;
  LoopPolicy effective_loop_policy() const;
};

// Every configurable key, in a fixed order, with its setter and a printer.
// The same names are used in config files and as --long CLI flags.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};
const std::vector<ConfigKey>& config_keys();

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);

// Flat "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& config, std::istream& in,
                       const std::string& source = "config");
void apply_config_file(ExperimentConfig& config,
                       const std::filesystem::path& path);

std::map<std::string, std::string> config_echo(const ExperimentConfig& config);

// Builds the fitness backend; throws BackendUnavailable if an external program
// cannot be started or does not answer a probe fold.
std::unique_ptr<FitnessModel> make_fitness_model(const ExperimentConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  RunMetrics metrics;
  std::string best_structure;
};

// One algorithm on one seed, budget-limited, without touching the filesystem.
SeedRun run_single(const ExperimentConfig& config, const FitnessModel& model,
                   std::uint64_t seed);

// Runs every configured seed and writes metrics.csv, summary.json and, for
// PPO, scatter.csv. A single seed writes into config.out; several seeds write
// into config.out/seed-<n>/.
std::vector<SeedRun> run_experiment(const ExperimentConfig& config);

void write_metrics_csv(const RunMetrics& metrics, std::ostream& out);
void write_scatter_csv(const RunMetrics& metrics, std::ostream& out);
std::string summary_json(const ExperimentConfig& config, const SeedRun& run);

struct AblationArm {
  std::string name;
  std::vector<SeedRun> runs;  // paired with the other arm by index
  double median_final_best = 0.0;
};

struct AblationReport {
  std::string kind;  // "reward" or "loop"
  std::vector<AblationArm> arms;
  std::string to_json() const;
};

// DQN with plain reward (alpha 0) against RewardPenalty(alpha_penalty).
AblationReport run_ablation_reward(const ExperimentConfig& config);
// PPO with Terminate against TryAgain(max_iter).
AblationReport run_ablation_loop(const ExperimentConfig& config);

// Writes the sequence line then "<dot-bracket>  <energy>  <fitness>".
void fold_command(const std::string& sequence_text, const FitnessModel& model,
                  std::ostream& out);

// Fitness of `count` uniformly random sequences, in draw order.
std::vector<double> random_search(std::size_t length, std::size_t count,
                                  const FitnessModel& model, std::uint64_t seed);

double median(std::vector<double> values);
std::string format_number(double value);

}  // namespace rnarl
