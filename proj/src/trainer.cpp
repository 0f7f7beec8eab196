#include "negrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "config_json.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/problem_io.hpp"
#include "negrl/protocol.hpp"

namespace negrl {

namespace {

// Substream tags: every random decision of a run hangs off the run seed via
// a tagged path, so episode i is reproducible regardless of scheduling and
// training/evaluation problem spaces stay disjoint by construction.
constexpr std::uint64_t kTagParams = 0x70;
constexpr std::uint64_t kTagEpisode = 0x65;
constexpr std::uint64_t kTagProblem = 0x74;
constexpr std::uint64_t kTagOpponentSeed = 0x6f;
constexpr std::uint64_t kTagShuffle = 0x73;

std::string fmt_metric(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

using config_json::check_keys;

std::unique_ptr<PolicyModel> build_model(const TrainerConfig& config) {
  config.validate();
  if (config.policy == PolicyKind::kGnn) return make_gnn_policy(config.gat);
  FlatConfig flat;
  flat.hidden_layers = config.flat_hidden_layers;
  flat.hidden_width = config.flat_hidden_width;
  flat.group_sizes = config.problems.fixed->domain.value_set_sizes();
  return make_flat_policy(flat);
}

}  // namespace

std::string first_mover_name(FirstMover mover) {
  switch (mover) {
    case FirstMover::kCoin: return "coin";
    case FirstMover::kLearner: return "learner";
    case FirstMover::kOpponent: return "opponent";
  }
  throw InvalidInputError("unknown first-mover value");
}

FirstMover first_mover_by_name(const std::string& name) {
  if (name == "coin") return FirstMover::kCoin;
  if (name == "learner") return FirstMover::kLearner;
  if (name == "opponent") return FirstMover::kOpponent;
  throw ConfigError("unknown first_mover: " + name + " (expected coin, learner or opponent)");
}

void ProblemSource::validate() const {
  if (mode == Mode::kRandom) {
    generator.validate();
  } else {
    if (!fixed) throw ConfigError("fixed problem mode without a problem");
    fixed->validate();
  }
}

void TrainerConfig::validate() const {
  if (policy == PolicyKind::kGnn) {
    gat.validate();
  } else {
    if (flat_hidden_layers < 1 || flat_hidden_width < 1) {
      throw ConfigError("flat architecture must have positive depth and width");
    }
    if (problems.mode != ProblemSource::Mode::kFixed) {
      throw ConfigError("flat policy requires a fixed problem (size-bound observation)");
    }
  }
  if (total_timesteps < 1) throw ConfigError("total_timesteps must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be positive");
  if (batch_size % minibatch_size != 0) {
    throw ConfigError("batch_size must be divisible by minibatch_size");
  }
  if (update_epochs < 1) throw ConfigError("update_epochs must be positive");
  if (entropy_coef < 0 || value_coef < 0 || clip_epsilon < 0) {
    throw ConfigError("loss coefficients must be non-negative");
  }
  if (gamma < 0 || gamma > 1) throw ConfigError("gamma must be in [0, 1]");
  if (gae_lambda < 0 || gae_lambda > 1) throw ConfigError("gae_lambda must be in [0, 1]");
  if (learning_rate < 0) throw ConfigError("learning_rate must be non-negative");
  if (opponents.empty()) throw ConfigError("opponent set must not be empty");
  for (const auto& spec : opponents) spec.validate();
  problems.validate();
  if (deadline < 1) throw ConfigError("deadline must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be positive");
}

std::string trainer_config_to_json(const TrainerConfig& config) {
  nlohmann::json j;
  j["policy"] = policy_kind_name(config.policy);
  j["gat"] = {{"layers", config.gat.layers},
              {"hidden_width", config.gat.hidden_width},
              {"heads", config.gat.heads}};
  j["flat"] = {{"hidden_layers", config.flat_hidden_layers},
               {"hidden_width", config.flat_hidden_width}};
  j["total_timesteps"] = config.total_timesteps;
  j["batch_size"] = config.batch_size;
  j["minibatch_size"] = config.minibatch_size;
  j["update_epochs"] = config.update_epochs;
  j["entropy_coef"] = config.entropy_coef;
  j["gamma"] = config.gamma;
  j["value_coef"] = config.value_coef;
  j["gae_lambda"] = config.gae_lambda;
  j["clip_epsilon"] = config.clip_epsilon;
  j["learning_rate"] = config.learning_rate;
  j["anneal_lr"] = config.anneal_lr;
  j["normalize_advantages"] = config.normalize_advantages;
  j["mask_offer_logp_on_accept"] = config.mask_offer_logp_on_accept;
  j["seed"] = config.seed;
  nlohmann::json opponents = nlohmann::json::array();
  for (const auto& spec : config.opponents) {
    opponents.push_back(config_json::opponent_to_json(spec));
  }
  j["opponents"] = std::move(opponents);
  j["problems"] = config_json::problems_to_json(config.problems);
  j["deadline"] = config.deadline;
  j["first_mover"] = first_mover_name(config.first_mover);
  j["checkpoint_every"] = config.checkpoint_every;
  return j.dump(2);
}

TrainerConfig trainer_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, "", {"policy", "gat", "flat", "total_timesteps", "batch_size", "minibatch_size",
                     "update_epochs", "entropy_coef", "gamma", "value_coef", "gae_lambda",
                     "clip_epsilon", "learning_rate", "anneal_lr", "normalize_advantages",
                     "mask_offer_logp_on_accept", "seed", "opponents", "problems", "deadline",
                     "first_mover", "checkpoint_every"});
  TrainerConfig config;
  if (j.contains("policy")) config.policy = policy_kind_by_name(j.at("policy").get<std::string>());
  if (j.contains("gat")) {
    const auto& g = j.at("gat");
    check_keys(g, "gat.", {"layers", "hidden_width", "heads"});
    if (g.contains("layers")) config.gat.layers = g.at("layers").get<int>();
    if (g.contains("hidden_width")) config.gat.hidden_width = g.at("hidden_width").get<int>();
    if (g.contains("heads")) config.gat.heads = g.at("heads").get<int>();
  }
  if (j.contains("flat")) {
    const auto& f = j.at("flat");
    check_keys(f, "flat.", {"hidden_layers", "hidden_width"});
    if (f.contains("hidden_layers")) config.flat_hidden_layers = f.at("hidden_layers").get<int>();
    if (f.contains("hidden_width")) config.flat_hidden_width = f.at("hidden_width").get<int>();
  }
  if (j.contains("total_timesteps")) config.total_timesteps = j.at("total_timesteps").get<long long>();
  if (j.contains("batch_size")) config.batch_size = j.at("batch_size").get<int>();
  if (j.contains("minibatch_size")) config.minibatch_size = j.at("minibatch_size").get<int>();
  if (j.contains("update_epochs")) config.update_epochs = j.at("update_epochs").get<int>();
  if (j.contains("entropy_coef")) config.entropy_coef = j.at("entropy_coef").get<double>();
  if (j.contains("gamma")) config.gamma = j.at("gamma").get<double>();
  if (j.contains("value_coef")) config.value_coef = j.at("value_coef").get<double>();
  if (j.contains("gae_lambda")) config.gae_lambda = j.at("gae_lambda").get<double>();
  if (j.contains("clip_epsilon")) config.clip_epsilon = j.at("clip_epsilon").get<double>();
  if (j.contains("learning_rate")) config.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("anneal_lr")) config.anneal_lr = j.at("anneal_lr").get<bool>();
  if (j.contains("normalize_advantages")) {
    config.normalize_advantages = j.at("normalize_advantages").get<bool>();
  }
  if (j.contains("mask_offer_logp_on_accept")) {
    config.mask_offer_logp_on_accept = j.at("mask_offer_logp_on_accept").get<bool>();
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("opponents")) {
    config.opponents = config_json::opponents_from_json(j.at("opponents"), "opponents");
  }
  if (j.contains("problems")) {
    config.problems = config_json::problems_from_json(j.at("problems"), "problems.");
  }
  if (j.contains("deadline")) config.deadline = j.at("deadline").get<int>();
  if (j.contains("first_mover")) {
    config.first_mover = first_mover_by_name(j.at("first_mover").get<std::string>());
  }
  if (j.contains("checkpoint_every")) config.checkpoint_every = j.at("checkpoint_every").get<int>();
  config.validate();
  return config;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grad,
                         double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidInputError("adam step with mismatched sizes");
  }
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

void AdamOptimizer::restore(std::vector<double> m, std::vector<double> v, std::int64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw InvalidInputError("adam restore with mismatched sizes");
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

Trainer::Trainer(TrainerConfig config, std::string run_dir)
    : config_(std::move(config)),
      run_dir_(std::move(run_dir)),
      model_(build_model(config_)),
      adam_(model_->param_count()) {
  model_->init_params(substream_seed(config_.seed, {kTagParams}));
  master_params_ = model_->params_as_double();
  if (!run_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(run_dir_ + "/checkpoints", ec);
    if (ec) throw IoError("cannot create run directory: " + run_dir_ + ": " + ec.message());
    std::ofstream snapshot(run_dir_ + "/config");
    snapshot << trainer_config_to_json(config_) << "\n";
    if (!snapshot) throw IoError("cannot write config snapshot in " + run_dir_);
    metrics_out_.open(run_dir_ + "/metrics.csv", std::ios::trunc);
    metrics_out_ << "step,episodic_return_mean,agreement_rate,policy_loss,value_loss,entropy,"
                    "clip_frac,lr\n";
    if (!metrics_out_) throw IoError("cannot write metrics.csv in " + run_dir_);
  }
}

void Trainer::resume_from(const std::string& checkpoint_path) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  if (loaded.model->kind() != model_->kind() ||
      loaded.model->param_count() != model_->param_count()) {
    throw ConfigError("checkpoint does not match the configured architecture");
  }
  master_params_ = std::move(loaded.params);
  model_->set_params_from_double(master_params_);
  if (loaded.meta.has_adam) {
    adam_.restore(loaded.meta.adam_m, loaded.meta.adam_v, loaded.meta.adam_t);
  }
  steps_done_ = loaded.meta.step;
  episodes_done_ = loaded.meta.episodes;
  batches_done_ = steps_done_ / config_.batch_size;
}

long long Trainer::planned_batches() const {
  return (config_.total_timesteps + config_.batch_size - 1) / config_.batch_size;
}

double Trainer::current_lr() const {
  if (!config_.anneal_lr) return config_.learning_rate;
  const double frac =
      1.0 - static_cast<double>(batches_done_) / static_cast<double>(planned_batches());
  return config_.learning_rate * std::max(frac, 0.0);
}

void Trainer::play_episode(long long episode_index, TrajectoryBatch& batch) {
  const std::uint64_t root = config_.seed;
  const auto index = static_cast<std::uint64_t>(episode_index);
  Rng episode_rng(substream_seed(root, {kTagEpisode, index}));

  NegotiationProblem problem =
      config_.problems.mode == ProblemSource::Mode::kFixed
          ? *config_.problems.fixed
          : generate_problem(config_.problems.generator, substream_seed(root, {kTagProblem, index}));

  const auto opponent_index = static_cast<std::size_t>(
      episode_rng.uniform_int(0, static_cast<std::int64_t>(config_.opponents.size()) - 1));
  std::unique_ptr<Opponent> opponent = make_opponent(config_.opponents[opponent_index]);
  opponent->reset(problem.domain, problem.utilities[1],
                  substream_seed(root, {kTagOpponentSeed, index}));

  int first_turn = 0;
  switch (config_.first_mover) {
    case FirstMover::kLearner: first_turn = 0; break;
    case FirstMover::kOpponent: first_turn = 1; break;
    case FirstMover::kCoin: first_turn = episode_rng.coin() ? 1 : 0; break;
  }

  SessionState session = SessionState::start(config_.deadline, first_turn);
  HistoryStats stats(problem.domain);
  std::shared_ptr<const GraphTopology> topology;
  if (config_.policy == PolicyKind::kGnn) topology = GraphTopology::build(problem.domain);

  const std::size_t first_transition = batch.transitions.size();
  const bool full_composite = !config_.mask_offer_logp_on_accept;
  std::optional<EpisodeResult> result;
  while (!result) {
    if (session.turn == 0) {
      auto observation = std::make_shared<const Observation>(
          model_->encode(problem.domain, problem.utilities[0], stats, session.round,
                         config_.deadline, topology));
      const PolicyOutput out = model_->forward(*observation);
      auto [record, log_p] = sample_action(out.dist, episode_rng, full_composite);
      const Action action =
          record.accept ? Action(Accept{}) : Action(Offer{record.values});
      result = step(session, action, problem.domain, problem.utilities[0], problem.utilities[1]);
      if (!record.accept) stats.record_offer(Side::kSelf, record.values);
      batch.transitions.push_back(Transition{std::move(observation), std::move(record), log_p,
                                             out.value, 0.0, false, episode_index});
    } else {
      try {
        const Action action = opponent->act(session);
        result = step(session, action, problem.domain, problem.utilities[0], problem.utilities[1]);
        if (const Offer* offer = std::get_if<Offer>(&action)) {
          stats.record_offer(Side::kOpponent, offer->outcome);
        }
      } catch (const Error& e) {
        // defensive: a misbehaving opponent aborts the episode, which is
        // dropped from the batch rather than poisoning it
        batch.transitions.resize(first_transition);
        std::cerr << "episode " << episode_index << " aborted (opponent "
                  << opponent_name(config_.opponents[opponent_index]) << "): " << e.what()
                  << "\n";
        return;
      }
    }
  }
  if (batch.transitions.size() == first_transition) return;  // learner never got a turn
  Transition& last = batch.transitions.back();
  last.reward = result->utilities[0];
  last.done = true;
  batch.episodes += 1;
  batch.return_sum += result->utilities[0];
  if (result->agreement) batch.agreements += 1;
}

TrajectoryBatch Trainer::collect_rollout() {
  TrajectoryBatch batch;
  while (batch.size() < config_.batch_size) {
    play_episode(episodes_done_, batch);
    ++episodes_done_;
  }
  return batch;
}

UpdateMetrics Trainer::ppo_update(TrajectoryBatch& batch, double lr) {
  const int n = batch.size();
  if (static_cast<int>(batch.advantages.size()) != n ||
      static_cast<int>(batch.returns.size()) != n) {
    throw InvalidInputError("ppo update requires computed advantages");
  }
  const int mb_size = config_.minibatch_size;
  const int minibatches = n / mb_size;
  if (minibatches < 1) throw InvalidInputError("batch smaller than one minibatch");

  const std::vector<double> param_snapshot = master_params_;
  const std::vector<double> adam_m_snapshot = adam_.m();
  const std::vector<double> adam_v_snapshot = adam_.v();
  const std::int64_t adam_t_snapshot = adam_.steps();
  auto restore = [&] {
    master_params_ = param_snapshot;
    model_->set_params_from_double(master_params_);
    adam_.restore(adam_m_snapshot, adam_v_snapshot, adam_t_snapshot);
  };

  Rng shuffle_rng(
      substream_seed(config_.seed, {kTagShuffle, static_cast<std::uint64_t>(batches_done_)}));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grads(model_->param_count(), 0.0);
  const bool full_composite = !config_.mask_offer_logp_on_accept;

  UpdateMetrics metrics;
  double pg_sum = 0, value_sum = 0, entropy_sum = 0, clip_sum = 0, kl_sum = 0;

  for (int epoch = 0; epoch < config_.update_epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    for (int mb = 0; mb < minibatches; ++mb) {
      const int* idx = order.data() + static_cast<std::ptrdiff_t>(mb) * mb_size;

      double adv_mean = 0.0, adv_std = 0.0;
      if (config_.normalize_advantages && mb_size > 1) {
        for (int i = 0; i < mb_size; ++i) adv_mean += batch.advantages[static_cast<std::size_t>(idx[i])];
        adv_mean /= mb_size;
        double ss = 0.0;
        for (int i = 0; i < mb_size; ++i) {
          const double d = batch.advantages[static_cast<std::size_t>(idx[i])] - adv_mean;
          ss += d * d;
        }
        adv_std = std::sqrt(ss / (mb_size - 1));
      }

      model_->zero_grad();
      double mb_pg = 0, mb_value = 0, mb_entropy = 0, mb_kl = 0;
      int mb_clipped = 0;
      const double inv = 1.0 / mb_size;
      for (int i = 0; i < mb_size; ++i) {
        const Transition& tr = batch.transitions[static_cast<std::size_t>(idx[i])];
        const PolicyOutput out = model_->forward(*tr.observation);
        const double new_log_p = log_prob(out.dist, tr.action, full_composite);
        const double sample_entropy = entropy(out.dist);
        double adv = batch.advantages[static_cast<std::size_t>(idx[i])];
        if (config_.normalize_advantages && mb_size > 1) {
          adv = (adv - adv_mean) / (adv_std + 1e-8);
        }
        const double log_ratio = new_log_p - tr.log_prob;
        const double ratio = std::exp(log_ratio);
        const double unclipped = -adv * ratio;
        const double clipped =
            -adv * std::clamp(ratio, 1.0 - config_.clip_epsilon, 1.0 + config_.clip_epsilon);
        const double pg = std::max(unclipped, clipped);
        const double value_err = out.value - batch.returns[static_cast<std::size_t>(idx[i])];
        const double value_loss = 0.5 * value_err * value_err;
        const double sample_loss =
            pg + config_.value_coef * value_loss - config_.entropy_coef * sample_entropy;
        if (!std::isfinite(sample_loss)) {
          restore();
          throw NumericError("non-finite loss in ppo update; parameters restored");
        }
        mb_pg += pg;
        mb_value += value_loss;
        mb_entropy += sample_entropy;
        mb_kl += (ratio - 1.0) - log_ratio;
        if (std::abs(ratio - 1.0) > config_.clip_epsilon) ++mb_clipped;

        // gradient flows through the unclipped branch only when it is active
        const double dlogp_scale = unclipped >= clipped ? -adv * ratio : 0.0;
        const LogitGrads logp_grads = log_prob_grad(out.dist, tr.action, full_composite);
        const LogitGrads ent_grads = entropy_grad(out.dist);
        HeadGrads head_grads;
        head_grads.accept =
            inv * (dlogp_scale * logp_grads.accept - config_.entropy_coef * ent_grads.accept);
        head_grads.offer =
            inv * (dlogp_scale * logp_grads.offer - config_.entropy_coef * ent_grads.offer);
        head_grads.value = inv * config_.value_coef * value_err;
        model_->backward(*tr.observation, head_grads);
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      model_->accumulate_grad(grads, 1.0);
      adam_.step(master_params_, grads, lr);
      model_->set_params_from_double(master_params_);

      pg_sum += mb_pg * inv;
      value_sum += mb_value * inv;
      entropy_sum += mb_entropy * inv;
      clip_sum += static_cast<double>(mb_clipped) * inv;
      kl_sum += mb_kl * inv;
      ++metrics.gradient_steps;
    }
  }

  const double steps = std::max(metrics.gradient_steps, 1);
  metrics.policy_loss = pg_sum / steps;
  metrics.value_loss = value_sum / steps;
  metrics.entropy = entropy_sum / steps;
  metrics.clip_frac = clip_sum / steps;
  metrics.approx_kl = kl_sum / steps;
  return metrics;
}

void Trainer::write_metrics_row(const BatchMetrics& row) {
  if (!metrics_out_.is_open()) return;
  metrics_out_ << row.step << ',' << fmt_metric(row.episodic_return_mean) << ','
               << fmt_metric(row.agreement_rate) << ',' << fmt_metric(row.update.policy_loss)
               << ',' << fmt_metric(row.update.value_loss) << ',' << fmt_metric(row.update.entropy)
               << ',' << fmt_metric(row.update.clip_frac) << ',' << fmt_metric(row.lr) << '\n';
  metrics_out_.flush();
  if (!metrics_out_) throw IoError("failed writing metrics.csv");
}

void Trainer::checkpoint_if_due(bool force) {
  if (run_dir_.empty()) return;
  if (!force && batches_done_ % config_.checkpoint_every != 0) return;
  save_checkpoint_to(run_dir_ + "/checkpoints/step_" + std::to_string(steps_done_));
}

void Trainer::save_checkpoint_to(const std::string& path) const {
  CheckpointMeta meta;
  meta.train_seed = config_.seed;
  meta.step = steps_done_;
  meta.episodes = episodes_done_;
  meta.has_adam = true;
  meta.adam_t = adam_.steps();
  meta.adam_m = adam_.m();
  meta.adam_v = adam_.v();
  save_checkpoint(path, *model_, meta, &master_params_);
}

void Trainer::train() {
  while (steps_done_ < config_.total_timesteps) {
    const double lr = current_lr();
    TrajectoryBatch batch = collect_rollout();
    compute_gae(batch, config_.gamma, config_.gae_lambda);
    const UpdateMetrics update = ppo_update(batch, lr);
    steps_done_ += batch.size();
    ++batches_done_;
    BatchMetrics row;
    row.step = steps_done_;
    row.episodic_return_mean = batch.episodic_return_mean();
    row.agreement_rate = batch.agreement_rate();
    row.lr = lr;
    row.episodes = batch.episodes;
    row.update = update;
    history_.push_back(row);
    write_metrics_row(row);
    checkpoint_if_due(false);
    if (on_batch_) on_batch_(row);
  }
  checkpoint_if_due(true);
}

}  // namespace negrl
