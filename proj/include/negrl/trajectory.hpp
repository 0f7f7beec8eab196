#pragma once

#include <memory>
#include <vector>

#include "negrl/distribution.hpp"
#include "negrl/policy_model.hpp"

namespace negrl {

/// One learner step recorded during rollout. The observation is frozen at
/// behavior time; updates re-score the same observation under new
/// parameters.
struct Transition {
  std::shared_ptr<const Observation> observation;
  ActionRecord action;
  double log_prob = 0.0;  ///< behavior-policy log-probability
  double value = 0.0;     ///< behavior-time state value
  double reward = 0.0;    ///< zero on all non-terminal steps
  bool done = false;
  long long episode_id = 0;
};

/// Rollout batch of whole episodes: collection stops at the first episode
/// boundary at or past the configured batch size. Advantages and returns are
/// filled in by compute_gae.
struct TrajectoryBatch {
  std::vector<Transition> transitions;
  std::vector<double> advantages;
  std::vector<double> returns;
  long long episodes = 0;
  long long agreements = 0;
  double return_sum = 0.0;  ///< sum over episodes of total episode reward

  int size() const { return static_cast<int>(transitions.size()); }
  double episodic_return_mean() const { return episodes > 0 ? return_sum / episodes : 0.0; }
  double agreement_rate() const {
    return episodes > 0 ? static_cast<double>(agreements) / episodes : 0.0;
  }
};

/// Generalized advantage estimation, running strictly within episodes:
///   delta_t = r_t + gamma * V(o_{t+1}) * (1 - done_t) - V(o_t)
///   A_t     = delta_t + gamma * lambda * A_{t+1}
/// Returns are A_t + V(o_t). Everything is computed in double. Throws
/// InvalidInputError when the batch does not end on an episode boundary or
/// an episode crosses a slot without its done flag.
void compute_gae(TrajectoryBatch& batch, double gamma, double lambda);

}  // namespace negrl
