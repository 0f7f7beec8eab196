#pragma once

#include <memory>
#include <string>
#include <vector>

#include "negrl/protocol.hpp"
#include "negrl/rng.hpp"

namespace negrl {

enum class OpponentKind { kBoulware, kConceder, kLinear, kRandom };

/// Parameters of a baseline strategy. The time-dependent kinds aim at a
/// utility target that decays from 1 to `reservation` as the deadline
/// approaches; the concession exponent shapes the decay (0.2 concave
/// hardliner, 1 linear, 2 convex conceder). The random kind offers uniformly
/// and accepts anything strictly above its threshold.
struct OpponentSpec {
  OpponentKind kind = OpponentKind::kBoulware;
  double concession_exponent = 0.2;
  double reservation = 0.0;
  double accept_threshold = 0.6;  ///< random kind only

  void validate() const;
};

OpponentSpec opponent_spec(OpponentKind kind);
OpponentSpec opponent_spec_by_name(const std::string& name);
std::string opponent_name(const OpponentSpec& spec);
std::vector<OpponentSpec> baseline_opponents();

/// Target utility of a time-dependent strategy at a progress in [0, 1]:
/// 1 - (1 - reservation) * progress^(1/e). Monotonically non-increasing.
double target_utility(const OpponentSpec& spec, double progress);

/// Uniform interface consumed by the trainer and the evaluator: reset once
/// per episode, then act whenever it is this agent's turn.
class Opponent {
 public:
  virtual ~Opponent() = default;
  virtual void reset(const Domain& domain, const UtilityFunction& own_utility,
                     std::uint64_t seed) = 0;
  virtual Action act(const SessionState& session) = 0;
};

/// Instantiates the strategy for `spec`. The returned agent owns its
/// per-episode state; distinct instances never share state.
std::unique_ptr<Opponent> make_opponent(const OpponentSpec& spec);

}  // namespace negrl
