// negrl command-line entry point.
//
// One declarative JSON run config (sections: run_dir, generator, train, eval)
// plus per-subcommand flags; flags override file values. Exit codes:
// 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "../src/config_json.hpp"
#include "negrl/errors.hpp"
#include "negrl/eval_harness.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/problem_gen.hpp"
#include "negrl/problem_io.hpp"
#include "negrl/svg_plot.hpp"
#include "negrl/trainer.hpp"

namespace {

using namespace negrl;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Top-level run-config document; each section owns its schema.
struct RunConfigFile {
  std::string run_dir;
  nlohmann::json generator;  // null when absent
  nlohmann::json train;
  nlohmann::json eval;
};

RunConfigFile load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object in " + path);
  config_json::check_keys(j, "", {"run_dir", "generator", "train", "eval"});
  RunConfigFile file;
  if (j.contains("run_dir")) file.run_dir = j.at("run_dir").get<std::string>();
  if (j.contains("generator")) file.generator = j.at("generator");
  if (j.contains("train")) file.train = j.at("train");
  if (j.contains("eval")) file.eval = j.at("eval");
  return file;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == ',') {
      if (!current.empty()) parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

std::vector<OpponentSpec> parse_opponent_list(const std::string& text) {
  std::vector<OpponentSpec> specs;
  for (const auto& name : split_list(text)) specs.push_back(opponent_spec_by_name(name));
  if (specs.empty()) throw ConfigError("opponent list must not be empty");
  return specs;
}

/// `random` keeps the current generator settings; `fixed:PATH` loads a file.
void apply_problem_source(const std::string& text, ProblemSource& problems) {
  if (text == "random") {
    problems.mode = ProblemSource::Mode::kRandom;
    problems.fixed.reset();
    problems.fixed_path.clear();
    return;
  }
  if (text.rfind("fixed:", 0) == 0) {
    const std::string path = text.substr(6);
    if (path.empty()) throw ConfigError("--problems fixed: needs a file path");
    problems.mode = ProblemSource::Mode::kFixed;
    problems.fixed_path = path;
    problems.fixed = load_problem(path);
    return;
  }
  throw ConfigError("--problems expects 'random' or 'fixed:PATH', got '" + text + "'");
}

std::string resolve_run_dir(const std::string& explicit_dir, const TrainerConfig& config) {
  if (!explicit_dir.empty()) return explicit_dir;
  const char* env_root = std::getenv("NEGRL_RUN_ROOT");
  const std::filesystem::path root = (env_root && *env_root) ? env_root : "runs";
  const std::string base = policy_kind_name(config.policy) + "_seed" + std::to_string(config.seed);
  std::filesystem::path candidate = root / base;
  for (int suffix = 2; std::filesystem::exists(candidate); ++suffix) {
    candidate = root / (base + "-" + std::to_string(suffix));
  }
  return candidate.string();
}

struct GeneratorFlags {
  std::uint64_t min_outcomes = 0, max_outcomes = 0;
  int min_objectives = 0, max_objectives = 0, min_values = 0, max_values = 0;
};

void add_generator_flags(CLI::App* cmd, GeneratorFlags& flags) {
  cmd->add_option("--min-outcomes", flags.min_outcomes, "Smallest admissible |Omega|");
  cmd->add_option("--max-outcomes", flags.max_outcomes, "Largest admissible |Omega|");
  cmd->add_option("--min-objectives", flags.min_objectives, "Fewest objectives");
  cmd->add_option("--max-objectives", flags.max_objectives, "Most objectives");
  cmd->add_option("--min-values", flags.min_values, "Smallest per-objective value count");
  cmd->add_option("--max-values", flags.max_values, "Largest per-objective value count");
}

void apply_generator_flags(const CLI::App* cmd, const GeneratorFlags& flags,
                           GeneratorConfig& config) {
  if (cmd->count("--min-outcomes")) config.min_outcomes = flags.min_outcomes;
  if (cmd->count("--max-outcomes")) config.max_outcomes = flags.max_outcomes;
  if (cmd->count("--min-objectives")) config.min_objectives = flags.min_objectives;
  if (cmd->count("--max-objectives")) config.max_objectives = flags.max_objectives;
  if (cmd->count("--min-values")) config.min_values = flags.min_values;
  if (cmd->count("--max-values")) config.max_values = flags.max_values;
}

int cmd_gen_problems(const std::string& config_path, const CLI::App* cmd,
                     const GeneratorFlags& flags, const std::string& out_dir, int count,
                     std::uint64_t seed, bool seed_set) {
  GeneratorConfig config;
  if (!config_path.empty()) {
    const RunConfigFile file = load_run_config(config_path);
    if (!file.generator.is_null()) {
      config = config_json::generator_from_json(file.generator, "generator.");
    }
  }
  apply_generator_flags(cmd, flags, config);
  if (seed_set) config.seed = seed;
  config.validate();

  std::filesystem::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    const NegotiationProblem problem =
        generate_problem(config, substream_seed(config.seed, {static_cast<std::uint64_t>(i)}));
    const std::string path =
        (std::filesystem::path(out_dir) / ("problem_" + std::to_string(i))).string();
    save_problem(path, problem);
    std::cout << path << "  |Omega| = " << problem.domain.outcome_space_size() << "  m = "
              << problem.domain.num_objectives() << '\n';
  }
  std::cout << "wrote " << count << " problem(s) to " << out_dir << '\n';
  return 0;
}

struct TrainFlags {
  std::string run_dir, resume, policy, opponents, problems, first_mover;
  std::uint64_t seed = 0;
  long long total_timesteps = 0;
  int batch_size = 0, minibatch_size = 0, update_epochs = 0, deadline = 0;
  int layers = 0, width = 0, heads = 0, flat_layers = 0, flat_width = 0, checkpoint_every = 0;
  double entropy_coef = 0, gamma = 0, value_coef = 0, gae_lambda = 0, clip_epsilon = 0;
  double learning_rate = 0;
  bool anneal_lr = true;
  bool mask_offer_logp = false;
};

int cmd_train(const std::string& config_path, const CLI::App* cmd, const TrainFlags& flags,
              const GeneratorFlags& gen_flags) {
  TrainerConfig config;
  std::string run_dir = flags.run_dir;
  if (!config_path.empty()) {
    const RunConfigFile file = load_run_config(config_path);
    if (!file.train.is_null()) config = trainer_config_from_json(file.train.dump());
    if (run_dir.empty()) run_dir = file.run_dir;
  }
  apply_generator_flags(cmd, gen_flags, config.problems.generator);
  if (cmd->count("--policy")) config.policy = policy_kind_by_name(flags.policy);
  if (cmd->count("--opponents")) config.opponents = parse_opponent_list(flags.opponents);
  if (cmd->count("--problems")) apply_problem_source(flags.problems, config.problems);
  if (cmd->count("--seed")) config.seed = flags.seed;
  if (cmd->count("--total-timesteps")) config.total_timesteps = flags.total_timesteps;
  if (cmd->count("--batch-size")) config.batch_size = flags.batch_size;
  if (cmd->count("--minibatch-size")) config.minibatch_size = flags.minibatch_size;
  if (cmd->count("--update-epochs")) config.update_epochs = flags.update_epochs;
  if (cmd->count("--entropy-coef")) config.entropy_coef = flags.entropy_coef;
  if (cmd->count("--gamma")) config.gamma = flags.gamma;
  if (cmd->count("--value-coef")) config.value_coef = flags.value_coef;
  if (cmd->count("--gae-lambda")) config.gae_lambda = flags.gae_lambda;
  if (cmd->count("--clip-epsilon")) config.clip_epsilon = flags.clip_epsilon;
  if (cmd->count("--learning-rate")) config.learning_rate = flags.learning_rate;
  if (cmd->count("--anneal-lr") || cmd->count("--no-anneal-lr")) {
    config.anneal_lr = flags.anneal_lr;
  }
  if (cmd->count("--mask-offer-logp-on-accept")) {
    config.mask_offer_logp_on_accept = flags.mask_offer_logp;
  }
  if (cmd->count("--layers")) config.gat.layers = flags.layers;
  if (cmd->count("--width")) config.gat.hidden_width = flags.width;
  if (cmd->count("--heads")) config.gat.heads = flags.heads;
  if (cmd->count("--flat-layers")) config.flat_hidden_layers = flags.flat_layers;
  if (cmd->count("--flat-width")) config.flat_hidden_width = flags.flat_width;
  if (cmd->count("--deadline")) config.deadline = flags.deadline;
  if (cmd->count("--first-mover")) config.first_mover = first_mover_by_name(flags.first_mover);
  if (cmd->count("--checkpoint-every")) config.checkpoint_every = flags.checkpoint_every;
  config.validate();

  run_dir = resolve_run_dir(run_dir, config);
  Trainer trainer(config, run_dir);
  if (!flags.resume.empty()) trainer.resume_from(flags.resume);
  std::cout << "run dir: " << run_dir << "  (" << trainer.planned_batches()
            << " planned batches, " << trainer.model().param_count() << " parameters)\n";
  trainer.set_batch_callback([&trainer](const BatchMetrics& row) {
    std::cout << "batch " << trainer.batches_done() << "/" << trainer.planned_batches()
              << "  step " << row.step << "  return " << row.episodic_return_mean
              << "  agreement " << row.agreement_rate << "  lr " << row.lr << std::endl;
  });
  trainer.train();
  std::cout << "done: " << trainer.steps_done() << " steps, " << trainer.batches_done()
            << " batches; artifacts in " << run_dir << '\n';
  return 0;
}

struct EvalFlags {
  std::string checkpoints, out = "eval", opponents, problems, first_mover;
  int games = 0, deadline = 0;
  std::uint64_t seed = 0;
  bool greedy = false;
};

int cmd_evaluate(const std::string& config_path, const CLI::App* cmd, const EvalFlags& flags,
                 const GeneratorFlags& gen_flags) {
  EvalConfig config;
  if (!config_path.empty()) {
    const RunConfigFile file = load_run_config(config_path);
    if (!file.eval.is_null()) config = eval_config_from_json(file.eval.dump());
  }
  apply_generator_flags(cmd, gen_flags, config.problems.generator);
  if (cmd->count("--checkpoints")) config.checkpoint_paths = split_list(flags.checkpoints);
  if (cmd->count("--opponents")) config.opponents = parse_opponent_list(flags.opponents);
  if (cmd->count("--problems")) apply_problem_source(flags.problems, config.problems);
  if (cmd->count("--games")) config.games_per_opponent = flags.games;
  if (cmd->count("--seed")) config.seed = flags.seed;
  if (cmd->count("--deadline")) config.deadline = flags.deadline;
  if (cmd->count("--greedy")) config.greedy = flags.greedy;
  if (cmd->count("--first-mover")) config.first_mover = first_mover_by_name(flags.first_mover);
  config.validate();
  if (config.checkpoint_paths.empty()) {
    throw ConfigError("evaluate needs --checkpoints or an eval.checkpoints config entry");
  }

  const EvalResults results = run_tournament(config);
  write_eval_csvs(flags.out, results);
  std::cout << "opponent        mean_self  ci99_self  mean_opp   ci99_opp\n";
  for (const auto& row : results.summary) {
    std::printf("%-15s %9.4f  %9.4f  %9.4f  %9.4f\n", row.opponent.c_str(), row.mean_self,
                row.ci99_self, row.mean_opp, row.ci99_opp);
  }
  std::cout << "wrote " << flags.out << "/results.csv and " << flags.out << "/summary.csv\n";
  return 0;
}

int cmd_plot(const std::string& run_dir, const std::string& results_dir,
             const std::string& out_dir_flag) {
  namespace fs = std::filesystem;
  if (run_dir.empty() && results_dir.empty()) {
    throw ConfigError("plot needs --run-dir and/or --results");
  }
  std::string metrics_path;
  if (!run_dir.empty()) {
    metrics_path = (fs::path(run_dir) / "metrics.csv").string();
    if (!fs::exists(metrics_path)) {
      throw IoError("no metrics.csv in " + run_dir + " (nothing trained there yet?)");
    }
  }
  std::string summary_path;
  if (!results_dir.empty()) {
    summary_path = (fs::path(results_dir) / "summary.csv").string();
    if (!fs::exists(summary_path)) throw IoError("no summary.csv in " + results_dir);
  } else if (!run_dir.empty() && fs::exists(fs::path(run_dir) / "summary.csv")) {
    summary_path = (fs::path(run_dir) / "summary.csv").string();
  }
  const std::string out_dir = !out_dir_flag.empty()     ? out_dir_flag
                              : !run_dir.empty()        ? run_dir
                                                        : results_dir;
  const std::vector<std::string> written = render_run_plots(metrics_path, summary_path, out_dir);
  for (const auto& path : written) std::cout << path << '\n';
  return 0;
}

int cmd_inspect_graph(const CLI::App* cmd, const std::string& problem_path, std::uint64_t seed,
                      int agent, int round, int deadline) {
  NegotiationProblem problem = !problem_path.empty()
                                   ? load_problem(problem_path)
                                   : generate_problem(GeneratorConfig{}, seed);
  if (agent != 0 && agent != 1) throw ConfigError("--agent must be 0 or 1");
  if (cmd->count("--seed") && !problem_path.empty()) {
    throw ConfigError("--problem and --seed are mutually exclusive");
  }
  HistoryStats stats(problem.domain);
  const ObservationGraph graph =
      build_graph(problem.domain, problem.utilities[static_cast<std::size_t>(agent)], stats,
                  round, deadline);
  std::cout << graph_to_string(graph);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negrl: bilateral negotiation RL (protocol, training, evaluation)"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Run config JSON (sections: run_dir, generator, train, eval)")
      ->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen-problems", "Generate random negotiation problems");
  std::string gen_out = "problems";
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  GeneratorFlags gen_flags;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--count", gen_count, "Number of problems")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");
  add_generator_flags(gen, gen_flags);

  auto* train = app.add_subcommand("train", "Train a negotiation policy with PPO");
  TrainFlags train_flags;
  train->add_option("--run-dir", train_flags.run_dir, "Run directory (default under $NEGRL_RUN_ROOT or ./runs)");
  train->add_option("--resume", train_flags.resume, "Checkpoint to resume from")
      ->check(CLI::ExistingFile);
  train->add_option("--policy", train_flags.policy, "gnn or flat");
  train->add_option("--opponents", train_flags.opponents,
                    "Comma list: boulware,conceder,linear,random");
  train->add_option("--problems", train_flags.problems, "random or fixed:PATH");
  train->add_option("--seed", train_flags.seed, "Run seed");
  train->add_option("--total-timesteps", train_flags.total_timesteps, "Environment steps");
  train->add_option("--batch-size", train_flags.batch_size, "Steps per PPO batch");
  train->add_option("--minibatch-size", train_flags.minibatch_size, "Minibatch size");
  train->add_option("--update-epochs", train_flags.update_epochs, "Epochs per batch");
  train->add_option("--entropy-coef", train_flags.entropy_coef, "Entropy bonus coefficient");
  train->add_option("--gamma", train_flags.gamma, "Discount factor");
  train->add_option("--value-coef", train_flags.value_coef, "Value-loss coefficient");
  train->add_option("--gae-lambda", train_flags.gae_lambda, "GAE lambda");
  train->add_option("--clip-epsilon", train_flags.clip_epsilon, "PPO clip range");
  train->add_option("--learning-rate", train_flags.learning_rate, "Initial learning rate");
  train->add_flag("--anneal-lr,!--no-anneal-lr", train_flags.anneal_lr,
                  "Linearly anneal the learning rate to 0");
  train->add_flag("--mask-offer-logp-on-accept", train_flags.mask_offer_logp,
                  "Drop the offer-component log-prob on Accept samples");
  train->add_option("--layers", train_flags.layers, "GAT layers");
  train->add_option("--width", train_flags.width, "GAT hidden width");
  train->add_option("--heads", train_flags.heads, "GAT attention heads");
  train->add_option("--flat-layers", train_flags.flat_layers, "Flat-policy hidden layers");
  train->add_option("--flat-width", train_flags.flat_width, "Flat-policy hidden width");
  train->add_option("--deadline", train_flags.deadline, "Protocol deadline H");
  train->add_option("--first-mover", train_flags.first_mover, "coin, learner or opponent");
  train->add_option("--checkpoint-every", train_flags.checkpoint_every,
                    "Batches between checkpoints");
  GeneratorFlags train_gen_flags;
  add_generator_flags(train, train_gen_flags);

  auto* evaluate = app.add_subcommand("evaluate", "Tournament-evaluate trained checkpoints");
  EvalFlags eval_flags;
  evaluate->add_option("--checkpoints", eval_flags.checkpoints, "Comma list of checkpoint files");
  evaluate->add_option("--out", eval_flags.out, "Output directory for CSVs");
  evaluate->add_option("--games", eval_flags.games, "Games per opponent");
  evaluate->add_option("--opponents", eval_flags.opponents,
                       "Comma list: boulware,conceder,linear,random");
  evaluate->add_option("--problems", eval_flags.problems, "random or fixed:PATH");
  evaluate->add_option("--seed", eval_flags.seed, "Evaluation seed");
  evaluate->add_option("--deadline", eval_flags.deadline, "Protocol deadline H");
  evaluate->add_flag("--greedy", eval_flags.greedy, "Argmax actions instead of sampling");
  evaluate->add_option("--first-mover", eval_flags.first_mover, "coin, learner or opponent");
  GeneratorFlags eval_gen_flags;
  add_generator_flags(evaluate, eval_gen_flags);

  auto* plot = app.add_subcommand("plot", "Render SVG plots from run/eval artifacts");
  std::string plot_run_dir, plot_results, plot_out;
  plot->add_option("--run-dir", plot_run_dir, "Run directory containing metrics.csv");
  plot->add_option("--results", plot_results, "Directory containing summary.csv");
  plot->add_option("--out", plot_out, "Output directory (default: input directory)");

  auto* inspect = app.add_subcommand("inspect-graph", "Dump an observation graph as text");
  std::string inspect_problem;
  std::uint64_t inspect_seed = 0;
  int inspect_agent = 0, inspect_round = 0, inspect_deadline = 40;
  inspect->add_option("--problem", inspect_problem, "Problem file to encode")
      ->check(CLI::ExistingFile);
  inspect->add_option("--seed", inspect_seed, "Generate a problem from this seed instead");
  inspect->add_option("--agent", inspect_agent, "Perspective agent (0 or 1)");
  inspect->add_option("--round", inspect_round, "Elapsed turns t");
  inspect->add_option("--deadline", inspect_deadline, "Protocol deadline H");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_problems(config_path, gen, gen_flags, gen_out, gen_count, gen_seed,
                              gen->count("--seed") > 0);
    }
    if (train->parsed()) return cmd_train(config_path, train, train_flags, train_gen_flags);
    if (evaluate->parsed()) {
      return cmd_evaluate(config_path, evaluate, eval_flags, eval_gen_flags);
    }
    if (plot->parsed()) return cmd_plot(plot_run_dir, plot_results, plot_out);
    if (inspect->parsed()) {
      return cmd_inspect_graph(inspect, inspect_problem, inspect_seed, inspect_agent,
                               inspect_round, inspect_deadline);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
