#include "negrl/eval_harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "config_json.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/protocol.hpp"

namespace negrl {

namespace {

// Evaluation substream tags; disjoint from the trainer's tags so random-mode
// evaluation problems can never collide with training problems.
constexpr std::uint64_t kTagEvalProblem = 0x76;
constexpr std::uint64_t kTagEvalEpisode = 0x67;
constexpr std::uint64_t kTagEvalOpponent = 0x6b;

std::string fmt_metric(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

struct GameOutcome {
  double utility_self = 0.0;
  double utility_opp = 0.0;
  bool agreed = false;
  int rounds = 0;
};

GameOutcome play_game(PolicyModel& model, const NegotiationProblem& problem,
                      Opponent& opponent, const EvalConfig& config, Rng& episode_rng) {
  int first_turn = 0;
  switch (config.first_mover) {
    case FirstMover::kLearner: first_turn = 0; break;
    case FirstMover::kOpponent: first_turn = 1; break;
    case FirstMover::kCoin: first_turn = episode_rng.coin() ? 1 : 0; break;
  }
  SessionState session = SessionState::start(config.deadline, first_turn);
  HistoryStats stats(problem.domain);
  std::shared_ptr<const GraphTopology> topology;
  if (model.kind() == PolicyKind::kGnn) topology = GraphTopology::build(problem.domain);

  std::optional<EpisodeResult> result;
  while (!result) {
    if (session.turn == 0) {
      const Observation observation = model.encode(
          problem.domain, problem.utilities[0], stats, session.round, config.deadline, topology);
      const PolicyOutput out = model.forward(observation);
      ActionRecord record;
      if (config.greedy) {
        record = greedy_action(out.dist);
      } else {
        record = sample_action(out.dist, episode_rng).first;
      }
      const Action action = record.accept ? Action(Accept{}) : Action(Offer{record.values});
      result = step(session, action, problem.domain, problem.utilities[0], problem.utilities[1]);
      if (!record.accept) stats.record_offer(Side::kSelf, record.values);
    } else {
      const Action action = opponent.act(session);
      result = step(session, action, problem.domain, problem.utilities[0], problem.utilities[1]);
      if (const Offer* offer = std::get_if<Offer>(&action)) {
        stats.record_offer(Side::kOpponent, offer->outcome);
      }
    }
  }

  if (result->agreement) {
    // engine payout must equal the additive utility definition exactly
    for (int agent = 0; agent < 2; ++agent) {
      const double direct = utility(problem.utilities[agent], problem.domain, *result->agreement);
      if (std::abs(direct - result->utilities[agent]) > 1e-12) {
        throw NumericError("engine utility deviates from the additive definition");
      }
    }
  }
  GameOutcome outcome;
  outcome.utility_self = result->utilities[0];
  outcome.utility_opp = result->utilities[1];
  outcome.agreed = result->agreement.has_value();
  outcome.rounds = result->rounds_used;
  return outcome;
}

}  // namespace

void EvalConfig::validate() const {
  if (games_per_opponent < 1) throw ConfigError("games_per_opponent must be >= 1");
  if (opponents.empty()) throw ConfigError("opponent set must not be empty");
  for (const auto& spec : opponents) spec.validate();
  problems.validate();
  if (deadline < 1) throw ConfigError("deadline must be positive");
}

std::pair<double, double> aggregate_ci(const std::vector<double>& samples, double level) {
  if (samples.size() < 2) {
    throw InsufficientDataError("confidence interval needs at least 2 samples, got " +
                                std::to_string(samples.size()));
  }
  if (level < 0.0 || level >= 1.0) throw InvalidInputError("confidence level must be in [0, 1)");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t_distribution<double> dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return {mean, t * sd / std::sqrt(n)};
}

EvalResults run_tournament(const EvalConfig& config, const std::vector<EvalPolicy>& policies) {
  config.validate();
  if (policies.empty()) throw ConfigError("tournament needs at least one policy");
  const bool random_mode = config.problems.mode == ProblemSource::Mode::kRandom;
  for (const auto& policy : policies) {
    if (!policy.model) throw InvalidInputError("null policy in tournament");
    if (random_mode && policy.model->kind() == PolicyKind::kFlat) {
      throw ConfigError("flat policy cannot be evaluated on random problems");
    }
  }

  const int games = config.games_per_opponent;
  // Problems are shared across policies and opponents: game g always plays
  // the same problem, so comparisons see identical problem draws.
  std::vector<NegotiationProblem> problems(static_cast<std::size_t>(games));
  for (int g = 0; g < games; ++g) {
    problems[static_cast<std::size_t>(g)] =
        random_mode ? generate_problem(config.problems.generator,
                                       substream_seed(config.seed,
                                                      {kTagEvalProblem, static_cast<std::uint64_t>(g)}))
                    : *config.problems.fixed;
  }

  EvalResults results;
  for (std::size_t o = 0; o < config.opponents.size(); ++o) {
    const OpponentSpec& spec = config.opponents[o];
    std::vector<double> self_means, opp_means;
    for (std::size_t c = 0; c < policies.size(); ++c) {
      double self_sum = 0.0, opp_sum = 0.0, rounds_sum = 0.0;
      long long agreements = 0;
      for (int g = 0; g < games; ++g) {
        const NegotiationProblem& problem = problems[static_cast<std::size_t>(g)];
        // substreams are indexed by (opponent, game) but not by policy:
        // identical checkpoints replay identical episodes (common random
        // numbers across the compared policies)
        Rng episode_rng(substream_seed(
            config.seed, {kTagEvalEpisode, static_cast<std::uint64_t>(o),
                          static_cast<std::uint64_t>(g)}));
        std::unique_ptr<Opponent> opponent = make_opponent(spec);
        opponent->reset(problem.domain, problem.utilities[1],
                        substream_seed(config.seed,
                                       {kTagEvalOpponent, static_cast<std::uint64_t>(o),
                                        static_cast<std::uint64_t>(g)}));
        const GameOutcome outcome =
            play_game(*policies[c].model, problem, *opponent, config, episode_rng);
        self_sum += outcome.utility_self;
        opp_sum += outcome.utility_opp;
        rounds_sum += outcome.rounds;
        if (outcome.agreed) ++agreements;
      }
      EvalCell cell;
      cell.opponent = opponent_name(spec);
      cell.checkpoint_seed = policies[c].label_seed;
      cell.mean_utility_self = self_sum / games;
      cell.mean_utility_opp = opp_sum / games;
      cell.agreement_rate = static_cast<double>(agreements) / games;
      cell.mean_rounds = rounds_sum / games;
      results.cells.push_back(cell);
      self_means.push_back(cell.mean_utility_self);
      opp_means.push_back(cell.mean_utility_opp);
    }
    EvalSummaryRow row;
    row.opponent = opponent_name(spec);
    if (self_means.size() >= 2) {
      std::tie(row.mean_self, row.ci99_self) = aggregate_ci(self_means, 0.99);
      std::tie(row.mean_opp, row.ci99_opp) = aggregate_ci(opp_means, 0.99);
    } else {
      // a single seed has no across-seed variance to report
      row.mean_self = self_means.front();
      row.mean_opp = opp_means.front();
    }
    results.summary.push_back(row);
  }
  return results;
}

EvalResults run_tournament(const EvalConfig& config) {
  if (config.checkpoint_paths.empty()) {
    throw ConfigError("evaluation needs at least one checkpoint");
  }
  std::vector<LoadedCheckpoint> loaded;
  loaded.reserve(config.checkpoint_paths.size());
  std::vector<EvalPolicy> policies;
  for (const auto& path : config.checkpoint_paths) {
    loaded.push_back(load_checkpoint(path));
    policies.push_back(EvalPolicy{loaded.back().model.get(), loaded.back().meta.train_seed});
  }
  return run_tournament(config, policies);
}

EvalConfig eval_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  config_json::check_keys(j, "", {"checkpoints", "opponents", "games_per_opponent", "problems",
                                  "seed", "deadline", "greedy", "first_mover"});
  EvalConfig config;
  if (j.contains("checkpoints")) {
    config.checkpoint_paths = j.at("checkpoints").get<std::vector<std::string>>();
  }
  if (j.contains("opponents")) {
    config.opponents = config_json::opponents_from_json(j.at("opponents"), "opponents");
  }
  if (j.contains("games_per_opponent")) {
    config.games_per_opponent = j.at("games_per_opponent").get<int>();
  }
  if (j.contains("problems")) {
    config.problems = config_json::problems_from_json(j.at("problems"), "problems.");
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("deadline")) config.deadline = j.at("deadline").get<int>();
  if (j.contains("greedy")) config.greedy = j.at("greedy").get<bool>();
  if (j.contains("first_mover")) {
    config.first_mover = first_mover_by_name(j.at("first_mover").get<std::string>());
  }
  config.validate();
  return config;
}

std::string results_to_csv(const EvalResults& results) {
  std::string out = "opponent,checkpoint_seed,mean_utility_self,mean_utility_opp,agreement_rate,"
                    "mean_rounds\n";
  for (const auto& cell : results.cells) {
    out += cell.opponent + ',' + std::to_string(cell.checkpoint_seed) + ',' +
           fmt_metric(cell.mean_utility_self) + ',' + fmt_metric(cell.mean_utility_opp) + ',' +
           fmt_metric(cell.agreement_rate) + ',' + fmt_metric(cell.mean_rounds) + '\n';
  }
  return out;
}

std::string summary_to_csv(const EvalResults& results) {
  std::string out = "opponent,mean_self,ci99_self,mean_opp,ci99_opp\n";
  for (const auto& row : results.summary) {
    out += row.opponent + ',' + fmt_metric(row.mean_self) + ',' + fmt_metric(row.ci99_self) +
           ',' + fmt_metric(row.mean_opp) + ',' + fmt_metric(row.ci99_opp) + '\n';
  }
  return out;
}

void write_eval_csvs(const std::string& out_dir, const EvalResults& results) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir + ": " + ec.message());
  std::ofstream results_file(out_dir + "/results.csv", std::ios::trunc);
  results_file << results_to_csv(results);
  if (!results_file) throw IoError("failed writing results.csv in " + out_dir);
  std::ofstream summary_file(out_dir + "/summary.csv", std::ios::trunc);
  summary_file << summary_to_csv(results);
  if (!summary_file) throw IoError("failed writing summary.csv in " + out_dir);
}

}  // namespace negrl
