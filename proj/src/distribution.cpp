#include "negrl/distribution.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "negrl/errors.hpp"

namespace negrl {

namespace {

/// Fills probs/log_probs from logits via a max-shifted log-sum-exp.
void softmax_pair(const Eigen::VectorXd& logits, Eigen::VectorXd& probs,
                  Eigen::VectorXd& log_probs) {
  const double max_logit = logits.maxCoeff();
  Eigen::VectorXd shifted = logits.array() - max_logit;
  const double log_norm = std::log(shifted.array().exp().sum());
  log_probs = shifted.array() - log_norm;
  probs = log_probs.array().exp();
}

double component_entropy(const Eigen::VectorXd& probs, const Eigen::VectorXd& log_probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * log_probs[i];
  }
  return h;
}

void check_record(const ActionDistribution& dist, const ActionRecord& record) {
  if (record.accept && !dist.accept_legal) {
    throw InvalidInputError("accept recorded against a distribution with accept masked out");
  }
  if (static_cast<int>(record.values.size()) != dist.num_objectives()) {
    throw InvalidInputError("action record has " + std::to_string(record.values.size()) +
                            " offer components, distribution has " +
                            std::to_string(dist.num_objectives()));
  }
  for (int b = 0; b < dist.num_objectives(); ++b) {
    const int v = record.values[static_cast<std::size_t>(b)];
    if (v < 0 || v >= dist.value_probs[static_cast<std::size_t>(b)].size()) {
      throw InvalidInputError("offer component " + std::to_string(v) +
                              " out of range for objective " + std::to_string(b));
    }
  }
}

}  // namespace

int ActionDistribution::total_values() const {
  int total = 0;
  for (const auto& p : value_probs) total += static_cast<int>(p.size());
  return total;
}

void ActionDistribution::validate(double tolerance) const {
  if (std::abs(accept_probs.sum() - 1.0) > tolerance) {
    throw NumericError("accept component does not normalize");
  }
  if (value_probs.size() != value_log_probs.size()) {
    throw InvalidInputError("mismatched probability/log-probability component counts");
  }
  for (std::size_t b = 0; b < value_probs.size(); ++b) {
    if (value_probs[b].size() == 0) {
      throw InvalidInputError("empty categorical for objective " + std::to_string(b));
    }
    if (std::abs(value_probs[b].sum() - 1.0) > tolerance) {
      throw NumericError("offer categorical " + std::to_string(b) + " does not normalize");
    }
  }
}

ActionDistribution make_distribution(const Eigen::Vector2d& accept_logits,
                                     const Eigen::VectorXd& offer_logits,
                                     const std::vector<int>& group_sizes,
                                     bool accept_legal) {
  if (!accept_logits.allFinite() || !offer_logits.allFinite()) {
    throw NumericError("non-finite logits passed to make_distribution");
  }
  if (group_sizes.empty()) {
    throw InvalidInputError("distribution needs at least one objective");
  }
  int total = 0;
  for (int size : group_sizes) {
    if (size < 1) throw InvalidInputError("categorical group must have at least one value");
    total += size;
  }
  if (total != offer_logits.size()) {
    throw InvalidInputError("offer logits length " + std::to_string(offer_logits.size()) +
                            " does not match group sizes total " + std::to_string(total));
  }

  ActionDistribution dist;
  dist.accept_legal = accept_legal;
  if (accept_legal) {
    Eigen::VectorXd probs, logs;
    softmax_pair(accept_logits, probs, logs);
    dist.accept_probs = probs;
    dist.accept_log_probs = logs;
  } else {
    dist.accept_probs = Eigen::Vector2d(1.0, 0.0);
    dist.accept_log_probs = Eigen::Vector2d(0.0, -std::numeric_limits<double>::infinity());
  }

  dist.value_probs.reserve(group_sizes.size());
  dist.value_log_probs.reserve(group_sizes.size());
  int offset = 0;
  for (int size : group_sizes) {
    Eigen::VectorXd probs, logs;
    softmax_pair(offer_logits.segment(offset, size), probs, logs);
    dist.value_probs.push_back(std::move(probs));
    dist.value_log_probs.push_back(std::move(logs));
    offset += size;
  }
  return dist;
}

std::pair<ActionRecord, double> sample_action(const ActionDistribution& dist, Rng& rng,
                                              bool full_composite) {
  ActionRecord record;
  if (dist.accept_legal) {
    std::vector<double> w{dist.accept_probs[0], dist.accept_probs[1]};
    record.accept = rng.categorical(w) == 1;
  } else {
    record.accept = false;
  }
  record.values.resize(dist.value_probs.size());
  for (std::size_t b = 0; b < dist.value_probs.size(); ++b) {
    const auto& probs = dist.value_probs[b];
    std::vector<double> w(probs.data(), probs.data() + probs.size());
    record.values[b] = static_cast<int>(rng.categorical(w));
  }
  return {record, log_prob(dist, record, full_composite)};
}

ActionRecord greedy_action(const ActionDistribution& dist) {
  ActionRecord record;
  record.accept = dist.accept_legal && dist.accept_probs[1] > dist.accept_probs[0];
  record.values.resize(dist.value_probs.size());
  for (std::size_t b = 0; b < dist.value_probs.size(); ++b) {
    Eigen::Index best = 0;
    dist.value_probs[b].maxCoeff(&best);
    record.values[b] = static_cast<int>(best);
  }
  return record;
}

double log_prob(const ActionDistribution& dist, const ActionRecord& record,
                bool full_composite) {
  check_record(dist, record);
  double lp = 0.0;
  if (dist.accept_legal) {
    lp += dist.accept_log_probs[record.accept ? 1 : 0];
  }
  if (full_composite || !record.accept) {
    for (int b = 0; b < dist.num_objectives(); ++b) {
      lp += dist.value_log_probs[static_cast<std::size_t>(b)][record.values[static_cast<std::size_t>(b)]];
    }
  }
  return lp;
}

double entropy(const ActionDistribution& dist) {
  double h = 0.0;
  if (dist.accept_legal) {
    h += component_entropy(dist.accept_probs, dist.accept_log_probs);
  }
  for (std::size_t b = 0; b < dist.value_probs.size(); ++b) {
    h += component_entropy(dist.value_probs[b], dist.value_log_probs[b]);
  }
  return h;
}

LogitGrads log_prob_grad(const ActionDistribution& dist, const ActionRecord& record,
                         bool full_composite) {
  check_record(dist, record);
  LogitGrads grads(dist.total_values());
  if (dist.accept_legal) {
    grads.accept = -dist.accept_probs;
    grads.accept[record.accept ? 1 : 0] += 1.0;
  }
  if (full_composite || !record.accept) {
    int offset = 0;
    for (int b = 0; b < dist.num_objectives(); ++b) {
      const auto& probs = dist.value_probs[static_cast<std::size_t>(b)];
      grads.offer.segment(offset, probs.size()) = -probs;
      grads.offer[offset + record.values[static_cast<std::size_t>(b)]] += 1.0;
      offset += static_cast<int>(probs.size());
    }
  }
  return grads;
}

LogitGrads entropy_grad(const ActionDistribution& dist) {
  LogitGrads grads(dist.total_values());
  if (dist.accept_legal) {
    const double h = component_entropy(dist.accept_probs, dist.accept_log_probs);
    for (int i = 0; i < 2; ++i) {
      const double p = dist.accept_probs[i];
      grads.accept[i] = p > 0.0 ? -p * (dist.accept_log_probs[i] + h) : 0.0;
    }
  }
  int offset = 0;
  for (std::size_t b = 0; b < dist.value_probs.size(); ++b) {
    const auto& probs = dist.value_probs[b];
    const auto& logs = dist.value_log_probs[b];
    const double h = component_entropy(probs, logs);
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      grads.offer[offset + i] = probs[i] > 0.0 ? -probs[i] * (logs[i] + h) : 0.0;
    }
    offset += static_cast<int>(probs.size());
  }
  return grads;
}

}  // namespace negrl
