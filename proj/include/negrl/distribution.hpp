#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "negrl/domain.hpp"
#include "negrl/rng.hpp"

namespace negrl {

/// What the policy sampled for one step: the accept component plus one value
/// per objective. The values are sampled jointly with the accept component;
/// when accept is set the engine-level action is Accept and the values are
/// the (unused) offer components, which the composite log-probability may
/// still include.
struct ActionRecord {
  bool accept = false;
  Outcome values;
};

/// Composite policy distribution: a 2-way accept component plus one
/// categorical per objective. Log-probabilities are carried alongside the
/// probabilities for numerically stable scoring of saturated logits.
/// When accept is illegal (no standing offer) the accept component is the
/// certain reject event and contributes nothing to scores or gradients.
struct ActionDistribution {
  Eigen::Vector2d accept_probs;                 ///< [reject, accept]
  Eigen::Vector2d accept_log_probs;
  std::vector<Eigen::VectorXd> value_probs;     ///< one categorical per objective
  std::vector<Eigen::VectorXd> value_log_probs;
  bool accept_legal = true;

  int num_objectives() const { return static_cast<int>(value_probs.size()); }
  int total_values() const;

  /// Throws if any component fails to normalize within `tolerance`.
  void validate(double tolerance = 1e-6) const;
};

/// Builds the composite distribution from raw logits. `offer_logits` holds
/// one logit per value node in objective-major order; `group_sizes`
/// partitions it per objective.
ActionDistribution make_distribution(const Eigen::Vector2d& accept_logits,
                                     const Eigen::VectorXd& offer_logits,
                                     const std::vector<int>& group_sizes,
                                     bool accept_legal);

/// Samples every component; the log-probability matches log_prob() with the
/// same `full_composite` convention. With accept illegal the accept
/// component is forced to reject and its log term is that of the certain
/// event (zero).
std::pair<ActionRecord, double> sample_action(const ActionDistribution& dist,
                                              Rng& rng,
                                              bool full_composite = true);

/// Per-component argmax.
ActionRecord greedy_action(const ActionDistribution& dist);

/// Composite log-probability. With `full_composite` the offer components are
/// always included; otherwise they are dropped for accept records.
double log_prob(const ActionDistribution& dist, const ActionRecord& record,
                bool full_composite = true);

/// Sum of component entropies (in nats).
double entropy(const ActionDistribution& dist);

/// Gradients with respect to the raw logits that produced the distribution.
struct LogitGrads {
  Eigen::Vector2d accept = Eigen::Vector2d::Zero();
  Eigen::VectorXd offer;  ///< objective-major, one entry per value

  explicit LogitGrads(int total_values) : offer(Eigen::VectorXd::Zero(total_values)) {}
};

/// d log_prob(record) / d logits.
LogitGrads log_prob_grad(const ActionDistribution& dist, const ActionRecord& record,
                         bool full_composite = true);

/// d entropy / d logits.
LogitGrads entropy_grad(const ActionDistribution& dist);

}  // namespace negrl
