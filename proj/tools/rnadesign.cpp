// Command-line front end: run experiments, ablations, and single folds.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rnarl/errors.hpp"
#include "rnarl/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct Overrides {
  std::string config_path;
  std::vector<std::string> seeds;
  std::map<std::string, std::string> values;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file");
  cmd->add_option("--seed", o.seeds, "seed (repeatable)");
  for (const auto& key : rnarl::config_keys()) {
    if (key.name == "seed") continue;
    cmd->add_option_function<std::string>(
        "--" + key.name,
        [&o, name = key.name](const std::string& v) { o.values[name] = v; },
        key.help);
  }
}

rnarl::ExperimentConfig resolve(const Overrides& o, rnarl::ExperimentConfig base) {
  if (!o.config_path.empty()) rnarl::apply_config_file(base, o.config_path);
  // CLI flags are applied in the registry order so they override the file.
  for (const auto& key : rnarl::config_keys()) {
    const auto it = o.values.find(key.name);
    if (it != o.values.end()) key.set(base, it->second);
  }
  if (!o.seeds.empty()) {
    std::string joined;
    for (const auto& s : o.seeds) joined += s + ",";
    rnarl::set_config_value(base, "seed", joined);
  }
  base.validate();
  return base;
}

void print_arm(const rnarl::AblationArm& arm) {
  std::cout << arm.name << ": median final best "
            << rnarl::format_number(arm.median_final_best) << " (";
  for (std::size_t i = 0; i < arm.runs.size(); ++i) {
    if (i > 0) std::cout << ", ";
    std::cout << "seed " << arm.runs[i].seed << " -> "
              << rnarl::format_number(arm.runs[i].metrics.final_best);
  }
  std::cout << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RNA sequence design with DQN, PPO, and greedy search"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run one algorithm over one or more seeds");
  add_experiment_flags(run, run_opts);

  Overrides reward_opts;
  auto* ablate_reward = app.add_subcommand(
      "ablate-reward", "DQN: plain reward against the revisit penalty");
  add_experiment_flags(ablate_reward, reward_opts);

  Overrides loop_opts;
  auto* ablate_loop = app.add_subcommand(
      "ablate-loop", "PPO: terminate against try-again loop handling");
  add_experiment_flags(ablate_loop, loop_opts);

  std::vector<std::string> fold_inputs;
  std::string fold_fitness = "builtin";
  std::string fold_cmd;
  auto* fold = app.add_subcommand("fold", "fold sequences and print energy and fitness");
  fold->add_option("sequences", fold_inputs, "RNA sequences")->required();
  fold->add_option("--fitness", fold_fitness, "builtin | external")
      ->check(CLI::IsMember({"builtin", "external"}));
  fold->add_option("--external-cmd", fold_cmd, "folding program command line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const auto config = resolve(run_opts, {});
      const auto runs = rnarl::run_experiment(config);
      for (const auto& r : runs) {
        std::cout << rnarl::to_string(config.algorithm) << " seed " << r.seed
                  << ": best " << rnarl::format_number(r.metrics.final_best)
                  << " " << r.metrics.best_sequence.str() << " "
                  << r.best_structure << " evals " << r.metrics.total_evals
                  << "\n";
      }
    } else if (*ablate_reward) {
      rnarl::ExperimentConfig base;
      base.algorithm = rnarl::Algorithm::Dqn;
      const auto report = rnarl::run_ablation_reward(resolve(reward_opts, base));
      for (const auto& arm : report.arms) print_arm(arm);
    } else if (*ablate_loop) {
      rnarl::ExperimentConfig base;
      base.algorithm = rnarl::Algorithm::Ppo;
      const auto report = rnarl::run_ablation_loop(resolve(loop_opts, base));
      for (const auto& arm : report.arms) print_arm(arm);
    } else if (*fold) {
      rnarl::ExperimentConfig config;
      config.fitness = fold_fitness;
      config.external_cmd = fold_cmd;
      if (config.fitness == "external" && config.external_cmd.empty()) {
        throw rnarl::ConfigError("external-cmd", "required when fitness = external");
      }
      const auto model = rnarl::make_fitness_model(config);
      for (const auto& s : fold_inputs) rnarl::fold_command(s, *model, std::cout);
    }
  } catch (const rnarl::BackendUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const rnarl::ProgramUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const rnarl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
