#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "negrl/opponents.hpp"
#include "negrl/policy_model.hpp"
#include "negrl/problem_gen.hpp"
#include "negrl/trajectory.hpp"

namespace negrl {

enum class FirstMover { kCoin, kLearner, kOpponent };
std::string first_mover_name(FirstMover mover);
FirstMover first_mover_by_name(const std::string& name);

/// Where episode problems come from: a fresh generator draw per episode, or
/// one fixed problem for the whole run.
struct ProblemSource {
  enum class Mode { kRandom, kFixed };

  Mode mode = Mode::kRandom;
  GeneratorConfig generator;
  std::optional<NegotiationProblem> fixed;
  std::string fixed_path;  ///< provenance of the fixed problem, for snapshots

  void validate() const;
};

struct TrainerConfig {
  PolicyKind policy = PolicyKind::kGnn;
  GatConfig gat;                ///< gnn architecture
  int flat_hidden_layers = 2;   ///< flat architecture (domain shape comes from the fixed problem)
  int flat_hidden_width = 256;

  long long total_timesteps = 2'000'000;
  int batch_size = 6000;
  int minibatch_size = 300;
  int update_epochs = 30;
  double entropy_coef = 0.001;
  double gamma = 1.0;
  double value_coef = 1.0;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  bool anneal_lr = true;
  bool normalize_advantages = true;
  /// When set, Accept samples drop the offer-component log-probability from
  /// the composite (the paper leaves the factorization unstated).
  bool mask_offer_logp_on_accept = false;
  std::uint64_t seed = 1;
  std::vector<OpponentSpec> opponents = baseline_opponents();
  ProblemSource problems;
  int deadline = 40;
  FirstMover first_mover = FirstMover::kCoin;
  int checkpoint_every = 10;  ///< batches between checkpoints

  void validate() const;
};

/// Strict JSON round-trip for config files and run-directory snapshots.
/// Parsing rejects unknown keys with their paths; a fixed problem referenced
/// by path is loaded eagerly.
std::string trainer_config_to_json(const TrainerConfig& config);
TrainerConfig trainer_config_from_json(const std::string& text);

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
  int gradient_steps = 0;
};

struct BatchMetrics {
  long long step = 0;  ///< cumulative env steps after this batch
  double episodic_return_mean = 0.0;
  double agreement_rate = 0.0;
  double lr = 0.0;
  long long episodes = 0;
  UpdateMetrics update;
};

/// Adaptive-moment optimizer over double master parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-5);

  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);

  std::int64_t steps() const { return t_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::int64_t t);

 private:
  double beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// PPO with GAE over whole negotiation episodes. Rollouts draw an opponent
/// uniformly and a problem per episode; updates run clipped-surrogate
/// minibatch epochs with an annealed learning rate. Single-threaded and
/// deterministic: episode i always consumes substream i of the run seed.
class Trainer {
 public:
  /// With a non-empty run_dir, creates `<run_dir>/checkpoints/`, writes the
  /// config snapshot and the metrics.csv header.
  explicit Trainer(TrainerConfig config, std::string run_dir = "");

  /// Restores parameters, optimizer state and the step counter.
  void resume_from(const std::string& checkpoint_path);

  void train();

  TrajectoryBatch collect_rollout();
  UpdateMetrics ppo_update(TrajectoryBatch& batch, double lr);

  /// Linearly annealed rate for the upcoming batch.
  double current_lr() const;

  PolicyModel& model() { return *model_; }
  const PolicyModel& model() const { return *model_; }
  const TrainerConfig& config() const { return config_; }
  long long steps_done() const { return steps_done_; }
  long long batches_done() const { return batches_done_; }
  long long episodes_done() const { return episodes_done_; }
  long long planned_batches() const;
  const std::string& run_dir() const { return run_dir_; }
  const std::vector<BatchMetrics>& metrics_history() const { return history_; }

  /// Writes a checkpoint (parameters + optimizer state) to an explicit path.
  void save_checkpoint_to(const std::string& path) const;

  /// Invoked after every completed batch (progress reporting).
  void set_batch_callback(std::function<void(const BatchMetrics&)> callback) {
    on_batch_ = std::move(callback);
  }

 private:
  void play_episode(long long episode_index, TrajectoryBatch& batch);
  void write_metrics_row(const BatchMetrics& row);
  void checkpoint_if_due(bool force);

  TrainerConfig config_;
  std::string run_dir_;
  std::unique_ptr<PolicyModel> model_;
  std::vector<double> master_params_;  ///< double-precision source of truth
  AdamOptimizer adam_;
  long long steps_done_ = 0;
  long long batches_done_ = 0;
  long long episodes_done_ = 0;
  std::vector<BatchMetrics> history_;
  std::ofstream metrics_out_;
  std::function<void(const BatchMetrics&)> on_batch_;
};

}  // namespace negrl
