#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "negrl/opponents.hpp"
#include "negrl/policy_model.hpp"
#include "negrl/trainer.hpp"

namespace negrl {

struct EvalConfig {
  std::vector<std::string> checkpoint_paths;  ///< one per training seed
  std::vector<OpponentSpec> opponents = baseline_opponents();
  int games_per_opponent = 1000;
  ProblemSource problems;
  std::uint64_t seed = 0;
  int deadline = 40;
  bool greedy = false;  ///< argmax actions instead of sampling
  FirstMover first_mover = FirstMover::kCoin;

  void validate() const;
};

/// Aggregates for one (checkpoint, opponent) pair.
struct EvalCell {
  std::string opponent;
  std::uint64_t checkpoint_seed = 0;
  double mean_utility_self = 0.0;
  double mean_utility_opp = 0.0;
  double agreement_rate = 0.0;
  double mean_rounds = 0.0;
};

/// Across-checkpoint aggregate for one opponent.
struct EvalSummaryRow {
  std::string opponent;
  double mean_self = 0.0;
  double ci99_self = 0.0;
  double mean_opp = 0.0;
  double ci99_opp = 0.0;
};

struct EvalResults {
  std::vector<EvalCell> cells;  ///< grouped by opponent, checkpoints in input order
  std::vector<EvalSummaryRow> summary;
};

/// Student-t confidence interval over per-seed means: returns (mean,
/// half-width) at the given two-sided level. Throws InsufficientDataError
/// below 2 samples.
std::pair<double, double> aggregate_ci(const std::vector<double>& samples, double level = 0.99);

/// A policy to evaluate, already in memory. `label_seed` is reported in the
/// checkpoint_seed column.
struct EvalPolicy {
  PolicyModel* model = nullptr;
  std::uint64_t label_seed = 0;
};

/// Round-robin tournament: every policy plays `games_per_opponent` episodes
/// against every opponent. Game g uses the same generated problem for every
/// (policy, opponent) pair; all evaluation substreams are disjoint from
/// training substreams by construction. Utilities of agreed episodes are
/// re-checked against the additive utility definition.
EvalResults run_tournament(const EvalConfig& config, const std::vector<EvalPolicy>& policies);

/// Loads the checkpoints of `config.checkpoint_paths` and evaluates them.
EvalResults run_tournament(const EvalConfig& config);

/// Parses an evaluation config from JSON. Unknown keys are rejected.
EvalConfig eval_config_from_json(const std::string& text);

std::string results_to_csv(const EvalResults& results);
std::string summary_to_csv(const EvalResults& results);

/// Writes results.csv and summary.csv into `out_dir`.
void write_eval_csvs(const std::string& out_dir, const EvalResults& results);

}  // namespace negrl
