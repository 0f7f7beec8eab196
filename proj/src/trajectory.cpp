#include "negrl/trajectory.hpp"

#include "negrl/errors.hpp"

namespace negrl {

void compute_gae(TrajectoryBatch& batch, double gamma, double lambda) {
  const auto& ts = batch.transitions;
  const int n = batch.size();
  batch.advantages.assign(static_cast<std::size_t>(n), 0.0);
  batch.returns.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return;
  if (!ts.back().done) {
    throw InvalidInputError("trajectory batch must end on an episode boundary");
  }
  double advantage = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const Transition& tr = ts[static_cast<std::size_t>(t)];
    if (tr.done) {
      advantage = tr.reward - tr.value;
    } else {
      const Transition& next = ts[static_cast<std::size_t>(t) + 1];
      if (next.episode_id != tr.episode_id) {
        throw InvalidInputError("episode boundary without done flag in trajectory batch");
      }
      const double delta = tr.reward + gamma * next.value - tr.value;
      advantage = delta + gamma * lambda * advantage;
    }
    batch.advantages[static_cast<std::size_t>(t)] = advantage;
    batch.returns[static_cast<std::size_t>(t)] = advantage + tr.value;
  }
}

}  // namespace negrl
