#include "rnarl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "rnarl/errors.hpp"
#include "rnarl/external_fold.hpp"

namespace rnarl {

namespace {

// Output location and scheduling do not affect results.
bool is_echoed(const std::string& key) {
  return key != "out" && key != "parallel";
}

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double value = std::stod(t, &used);
    if (used == t.size()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a number, got '" + text + "'");
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true/false, got '" + text + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key,
                                           const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) seeds.push_back(parse_uint(key, item));
  }
  if (seeds.empty()) throw ConfigError(key, "no seeds given");
  return seeds;
}

template <typename T>
ConfigKey size_key(std::string name, std::string help, T ExperimentConfig::*group,
                   std::size_t T::*field) {
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) {
            (c.*group).*field = parse_uint(name, v);
          },
          [=](const ExperimentConfig& c) {
            return std::to_string((c.*group).*field);
          }};
}

template <typename T>
ConfigKey real_key(std::string name, std::string help, T ExperimentConfig::*group,
                   double T::*field) {
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) {
            (c.*group).*field = parse_real(name, v);
          },
          [=](const ExperimentConfig& c) {
            return format_number((c.*group).*field);
          }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back({"algo", "dqn | ppo | greedy",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.algorithm = algorithm_from_string(trim(v));
                  },
                  [](const ExperimentConfig& c) { return to_string(c.algorithm); }});
  keys.push_back({"len", "sequence length L",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.length = parse_uint("len", v);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.length); }});
  keys.push_back({"seed", "comma-separated seeds",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.seeds = parse_seed_list("seed", v);
                  },
                  [](const ExperimentConfig& c) {
                    std::string out;
                    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                      if (i > 0) out += ",";
                      out += std::to_string(c.seeds[i]);
                    }
                    return out;
                  }});
  keys.push_back({"budget", "fitness evaluations per run",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.budget = parse_uint("budget", v);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.budget); }});
  keys.push_back({"loop-policy", "terminate | try-again | reward-penalty",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.loop_policy = loop_policy_from_string(trim(v));
                  },
                  [](const ExperimentConfig& c) {
                    return to_string(c.effective_loop_policy().kind);
                  }});
  keys.push_back({"max-iter", "retry budget for try-again",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.max_iter = parse_uint("max-iter", v);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.max_iter); }});
  keys.push_back({"alpha-penalty", "revisit penalty for reward-penalty",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.alpha_penalty = parse_real("alpha-penalty", v);
                  },
                  [](const ExperimentConfig& c) { return format_number(c.alpha_penalty); }});
  keys.push_back({"max-steps", "episode horizon (0 = 2 * len)",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.max_steps = parse_uint("max-steps", v);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.max_steps); }});
  keys.push_back({"fitness", "builtin | external",
                  [](ExperimentConfig& c, const std::string& v) {
                    const std::string t = trim(v);
                    if (t != "builtin" && t != "external") {
                      throw ConfigError("fitness", "expected builtin or external");
                    }
                    c.fitness = t;
                  },
                  [](const ExperimentConfig& c) { return c.fitness; }});
  keys.push_back({"external-cmd", "folding program command line",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.external_cmd = trim(v);
                  },
                  [](const ExperimentConfig& c) { return c.external_cmd; }});
  keys.push_back({"out", "output directory",
                  [](ExperimentConfig& c, const std::string& v) { c.out = trim(v); },
                  [](const ExperimentConfig& c) { return c.out.string(); }});
  keys.push_back({"parallel", "run seeds concurrently",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.parallel = parse_bool("parallel", v);
                  },
                  [](const ExperimentConfig& c) {
                    return std::string(c.parallel ? "true" : "false");
                  }});

  using E = ExperimentConfig;
  keys.push_back(real_key("dqn.gamma", "discount", &E::dqn, &DqnConfig::gamma));
  keys.push_back(real_key("dqn.lr", "SGD step size", &E::dqn, &DqnConfig::lr));
  keys.push_back(real_key("dqn.epsilon-start", "initial exploration rate", &E::dqn,
                          &DqnConfig::epsilon_start));
  keys.push_back(real_key("dqn.epsilon-end", "final exploration rate", &E::dqn,
                          &DqnConfig::epsilon_end));
  keys.push_back(real_key("dqn.epsilon-decay-fraction", "share of training spent annealing",
                          &E::dqn, &DqnConfig::epsilon_decay_fraction));
  keys.push_back(size_key("dqn.epochs", "epochs E", &E::dqn, &DqnConfig::epochs));
  keys.push_back(size_key("dqn.collect-steps", "environment steps per epoch M",
                          &E::dqn, &DqnConfig::collect_steps));
  keys.push_back(size_key("dqn.train-iters", "train steps per epoch N", &E::dqn,
                          &DqnConfig::train_iters));
  keys.push_back(size_key("dqn.batch-size", "replay minibatch", &E::dqn,
                          &DqnConfig::batch_size));
  keys.push_back(size_key("dqn.target-sync", "train steps between target copies",
                          &E::dqn, &DqnConfig::target_sync_interval));
  keys.push_back(size_key("dqn.hidden", "hidden units", &E::dqn, &DqnConfig::hidden));
  keys.push_back(real_key("dqn.reward-scale", "reward multiplier for targets",
                          &E::dqn, &DqnConfig::reward_scale));
  keys.push_back({"dqn.capacity", "replay capacity",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.dqn.per.capacity = parse_uint("dqn.capacity", v);
                  },
                  [](const ExperimentConfig& c) {
                    return std::to_string(c.dqn.per.capacity);
                  }});
  keys.push_back({"dqn.alpha-per", "prioritization exponent",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.dqn.per.alpha = parse_real("dqn.alpha-per", v);
                  },
                  [](const ExperimentConfig& c) { return format_number(c.dqn.per.alpha); }});
  keys.push_back({"dqn.epsilon-per", "priority floor",
                  [](ExperimentConfig& c, const std::string& v) {
                    c.dqn.per.epsilon = parse_real("dqn.epsilon-per", v);
                  },
                  [](const ExperimentConfig& c) {
                    return format_number(c.dqn.per.epsilon);
                  }});
  keys.push_back(real_key("dqn.beta-start", "initial importance exponent", &E::dqn,
                          &DqnConfig::beta_start));
  keys.push_back(real_key("dqn.beta-end", "final importance exponent", &E::dqn,
                          &DqnConfig::beta_end));

  keys.push_back(real_key("ppo.gamma", "discount", &E::ppo, &PpoConfig::gamma));
  keys.push_back(real_key("ppo.clip-ratio", "surrogate clip", &E::ppo,
                          &PpoConfig::clip_ratio));
  keys.push_back(real_key("ppo.kl-bound", "KL early-stop threshold", &E::ppo,
                          &PpoConfig::kl_bound));
  keys.push_back(real_key("ppo.actor-lr", "actor step size", &E::ppo,
                          &PpoConfig::actor_lr));
  keys.push_back(real_key("ppo.critic-lr", "critic step size", &E::ppo,
                          &PpoConfig::critic_lr));
  keys.push_back(size_key("ppo.epochs", "epochs E", &E::ppo, &PpoConfig::epochs));
  keys.push_back(size_key("ppo.steps-per-batch", "stored steps per epoch M",
                          &E::ppo, &PpoConfig::steps_per_batch));
  keys.push_back(size_key("ppo.update-epochs", "passes over each batch", &E::ppo,
                          &PpoConfig::update_epochs));
  keys.push_back(size_key("ppo.minibatch-size", "update minibatch", &E::ppo,
                          &PpoConfig::minibatch_size));
  keys.push_back(real_key("ppo.entropy-coef", "entropy bonus", &E::ppo,
                          &PpoConfig::entropy_coef));
  keys.push_back(size_key("ppo.hidden", "hidden units", &E::ppo, &PpoConfig::hidden));
  keys.push_back(real_key("ppo.reward-scale", "reward multiplier for returns",
                          &E::ppo, &PpoConfig::reward_scale));

  keys.push_back(size_key("greedy.population", "buffer size N", &E::greedy,
                          &GreedyConfig::population));
  keys.push_back(size_key("greedy.batch", "entries mutated per iteration n",
                          &E::greedy, &GreedyConfig::batch));
  keys.push_back(size_key("greedy.max-iterations", "iteration cap M", &E::greedy,
                          &GreedyConfig::max_iterations));
  keys.push_back(size_key("greedy.mutations", "flips per proposal", &E::greedy,
                          &GreedyConfig::mutations));
  keys.push_back(size_key("greedy.patience", "stale iterations before stopping",
                          &E::greedy, &GreedyConfig::patience));
  return keys;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_run_files(const ExperimentConfig& config, const SeedRun& run,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream csv;
    write_metrics_csv(run.metrics, csv);
    write_text(dir / "metrics.csv", csv.str());
  }
  write_text(dir / "summary.json", summary_json(config, run));
  if (config.algorithm == Algorithm::Ppo) {
    std::ostringstream csv;
    write_scatter_csv(run.metrics, csv);
    write_text(dir / "scatter.csv", csv.str());
  }
}

std::vector<SeedRun> run_seeds(const ExperimentConfig& config) {
  std::vector<SeedRun> runs(config.seeds.size());
  if (config.parallel && config.seeds.size() > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(config.seeds.size());
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          const auto model = make_fitness_model(config);
          runs[i] = run_single(config, *model, config.seeds[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return runs;
  }
  const auto model = make_fitness_model(config);
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    runs[i] = run_single(config, *model, config.seeds[i]);
  }
  return runs;
}

AblationArm run_arm(const std::string& name, const ExperimentConfig& config) {
  AblationArm arm;
  arm.name = name;
  arm.runs = run_seeds(config);
  std::vector<double> finals;
  for (const auto& r : arm.runs) finals.push_back(r.metrics.final_best);
  arm.median_final_best = median(finals);
  for (const auto& r : arm.runs) {
    write_run_files(config, r, config.out / name / ("seed-" + std::to_string(r.seed)));
  }
  return arm;
}

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Dqn: return "dqn";
    case Algorithm::Ppo: return "ppo";
    case Algorithm::Greedy: return "greedy";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "dqn") return Algorithm::Dqn;
  if (name == "ppo") return Algorithm::Ppo;
  if (name == "greedy") return Algorithm::Greedy;
  throw ConfigError("algo", "unknown algorithm '" + name + "'");
}

LoopPolicy ExperimentConfig::effective_loop_policy() const {
  LoopPolicyKind kind = LoopPolicyKind::Terminate;
  if (loop_policy) {
    kind = *loop_policy;
  } else if (algorithm == Algorithm::Ppo) {
    kind = LoopPolicyKind::TryAgain;
  }
  return {kind, max_iter, alpha_penalty};
}

EnvConfig ExperimentConfig::env_config() const {
  EnvConfig env;
  env.length = length;
  env.max_steps = max_steps;
  env.loop_policy = effective_loop_policy();
  return env;
}

void ExperimentConfig::validate() const {
  if (length < 1) throw ConfigError("len", "must be >= 1");
  if (budget < 1) throw ConfigError("budget", "must be > 0");
  if (seeds.empty()) throw ConfigError("seed", "at least one seed is required");
  if (fitness == "external" && external_cmd.empty()) {
    throw ConfigError("external-cmd", "required when fitness = external");
  }
  env_config().validate();
  switch (algorithm) {
    case Algorithm::Dqn: dqn.validate(); break;
    case Algorithm::Ppo: ppo.validate(); break;
    case Algorithm::Greedy: greedy.validate(); break;
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw ConfigError(key, "unknown configuration key");
}

void apply_config_text(ExperimentConfig& config, std::istream& in,
                       const std::string& source) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number),
                        "expected 'key = value'");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(ExperimentConfig& config,
                       const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  apply_config_text(config, in, path.string());
}

std::map<std::string, std::string> config_echo(const ExperimentConfig& config) {
  std::map<std::string, std::string> echo;
  for (const auto& k : config_keys()) {
    if (is_echoed(k.name)) echo[k.name] = k.get(config);
  }
  return echo;
}

std::unique_ptr<FitnessModel> make_fitness_model(const ExperimentConfig& config) {
  if (config.fitness == "builtin") return std::make_unique<BuiltinFitness>();
  auto model = std::make_unique<ExternalFoldModel>(config.external_cmd);
  try {
    model->fold(parse_sequence("GGGAAACCC"));
  } catch (const Error& e) {
    throw BackendUnavailable("external folding backend unavailable: " +
                             std::string(e.what()));
  }
  return model;
}

SeedRun run_single(const ExperimentConfig& config, const FitnessModel& model,
                   std::uint64_t seed) {
  config.validate();
  EvalCounter evaluator(model, config.budget);
  SeedRun run;
  run.seed = seed;
  switch (config.algorithm) {
    case Algorithm::Dqn:
      run.metrics = run_dqn(config.dqn, config.env_config(), evaluator, seed);
      break;
    case Algorithm::Ppo:
      run.metrics = run_ppo(config.ppo, config.env_config(), evaluator, seed);
      break;
    case Algorithm::Greedy:
      run.metrics = run_greedy(config.greedy, config.length, evaluator, seed);
      break;
  }
  if (run.metrics.best_sequence.size() > 0) {
    run.best_structure = model.fold(run.metrics.best_sequence).structure.dot_bracket();
  }
  return run;
}

std::vector<SeedRun> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<SeedRun> runs = run_seeds(config);
  for (const auto& run : runs) {
    const auto dir = runs.size() == 1
                         ? config.out
                         : config.out / ("seed-" + std::to_string(run.seed));
    write_run_files(config, run, dir);
  }
  return runs;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_metrics_csv(const RunMetrics& metrics, std::ostream& out) {
  out << "epoch,best_so_far,batch_avg,batch_max,evals\n";
  for (const auto& r : metrics.rows) {
    out << r.epoch << ',' << format_number(r.best_so_far) << ','
        << format_number(r.batch_avg) << ',' << format_number(r.batch_max)
        << ',' << r.evals << '\n';
  }
}

void write_scatter_csv(const RunMetrics& metrics, std::ostream& out) {
  out << "episode,best_fitness\n";
  for (const auto& p : metrics.scatter) {
    out << p.episode << ',' << format_number(p.best_fitness) << '\n';
  }
}

std::string summary_json(const ExperimentConfig& config, const SeedRun& run) {
  ordered_json j;
  j["algorithm"] = to_string(config.algorithm);
  ordered_json echo = ordered_json::object();
  for (const auto& k : config_keys()) {
    if (is_echoed(k.name)) echo[k.name] = k.get(config);
  }
  j["config"] = echo;
  j["seed"] = run.seed;
  j["final_best_fitness"] = run.metrics.final_best;
  j["best_sequence"] = run.metrics.best_sequence.str();
  j["best_structure"] = run.best_structure;
  j["total_evals"] = run.metrics.total_evals;
  j["budget"] = config.budget;
  j["epochs_run"] = run.metrics.rows.size();
  j["episodes"] = run.metrics.episode_lengths.size();
  j["env_steps"] = run.metrics.env_steps;
  if (config.algorithm == Algorithm::Ppo) j["mean_kl"] = run.metrics.epoch_kl;
  j["wall_time_s"] = run.metrics.wall_time_s;
  return j.dump(2) + "\n";
}

std::string AblationReport::to_json() const {
  ordered_json j;
  j["ablation"] = kind;
  ordered_json arms_json = ordered_json::array();
  for (const auto& arm : arms) {
    ordered_json a;
    a["name"] = arm.name;
    a["median_final_best"] = arm.median_final_best;
    ordered_json runs = ordered_json::array();
    for (const auto& r : arm.runs) {
      ordered_json rj;
      rj["seed"] = r.seed;
      rj["final_best"] = r.metrics.final_best;
      rj["total_evals"] = r.metrics.total_evals;
      std::vector<double> curve;
      for (const auto& row : r.metrics.rows) curve.push_back(row.best_so_far);
      rj["best_so_far"] = curve;
      rj["episode_lengths"] = r.metrics.episode_lengths;
      runs.push_back(rj);
    }
    a["runs"] = runs;
    arms_json.push_back(a);
  }
  j["arms"] = arms_json;
  return j.dump(2) + "\n";
}

AblationReport run_ablation_reward(const ExperimentConfig& config) {
  if (config.algorithm != Algorithm::Dqn) {
    throw ConfigError("algo", "reward ablation requires algo = dqn");
  }
  config.validate();
  ExperimentConfig plain = config;
  plain.loop_policy = LoopPolicyKind::RewardPenalty;
  plain.alpha_penalty = 0.0;
  plain.out = config.out / "ablation-reward";
  ExperimentConfig penalized = plain;
  penalized.alpha_penalty = config.alpha_penalty;

  AblationReport report;
  report.kind = "reward";
  report.arms.push_back(run_arm("plain", plain));
  report.arms.push_back(run_arm("reward-penalty", penalized));
  write_text(plain.out / "report.json", report.to_json());
  return report;
}

AblationReport run_ablation_loop(const ExperimentConfig& config) {
  if (config.algorithm != Algorithm::Ppo) {
    throw ConfigError("algo", "loop ablation requires algo = ppo");
  }
  config.validate();
  ExperimentConfig terminate = config;
  terminate.loop_policy = LoopPolicyKind::Terminate;
  terminate.out = config.out / "ablation-loop";
  ExperimentConfig try_again = terminate;
  try_again.loop_policy = LoopPolicyKind::TryAgain;

  AblationReport report;
  report.kind = "loop";
  report.arms.push_back(run_arm("terminate", terminate));
  report.arms.push_back(run_arm("try-again", try_again));
  write_text(terminate.out / "report.json", report.to_json());
  return report;
}

void fold_command(const std::string& sequence_text, const FitnessModel& model,
                  std::ostream& out) {
  const RnaSequence s = parse_sequence(sequence_text);
  const FoldResult r = model.fold(s);
  auto fixed = [](double v) {
    std::string t = format_number(v);
    if (t.find_first_of(".e") == std::string::npos) t += ".0";
    return t;
  };
  out << s.str() << '\n'
      << r.structure.dot_bracket() << "  " << fixed(r.energy) << "  "
      << fixed(0.0 - r.energy) << '\n';
}

std::vector<double> random_search(std::size_t length, std::size_t count,
                                  const FitnessModel& model, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 7));
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(fitness_of(random_sequence(rng, length), model));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace rnarl
