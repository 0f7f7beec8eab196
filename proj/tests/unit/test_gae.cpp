#include <doctest.h>

#include <cmath>
#include <vector>

#include "negrl/rng.hpp"
#include "negrl/trajectory.hpp"

using namespace negrl;

namespace {

Transition step(double value, double reward, bool done, long long episode_id) {
  Transition t;
  t.value = value;
  t.reward = reward;
  t.done = done;
  t.episode_id = episode_id;
  return t;
}

/// Direct double loop: A_t = sum_k (gamma*lambda)^k * delta_{t+k} within the
/// episode, delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t.
std::vector<double> brute_force_gae(const std::vector<Transition>& ts, double gamma,
                                    double lambda) {
  const std::size_t n = ts.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next_value = ts[t].done ? 0.0 : ts[t + 1].value;
    delta[t] = ts[t].reward + gamma * next_value - ts[t].value;
  }
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    double decay = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      sum += decay * delta[k];
      decay *= gamma * lambda;
      if (ts[k].done) break;
    }
    adv[t] = sum;
  }
  return adv;
}

TrajectoryBatch random_batch(std::uint64_t seed, int episodes) {
  Rng rng(seed);
  TrajectoryBatch batch;
  long long id = 0;
  for (int e = 0; e < episodes; ++e) {
    const int len = static_cast<int>(rng.uniform_int(1, 12));
    for (int t = 0; t < len; ++t) {
      const bool last = t == len - 1;
      batch.transitions.push_back(
          step(rng.normal(), last ? rng.uniform() : 0.0, last, id));
    }
    ++id;
  }
  batch.episodes = id;
  return batch;
}

}  // namespace

TEST_CASE("two-step episode worked example") {
  // V=(0.3,0.5), terminal reward 0.8, gamma=1, lambda=0.95:
  // delta=(0.2,0.3), A=(0.2+0.95*0.3, 0.3)=(0.485, 0.3)
  TrajectoryBatch batch;
  batch.transitions.push_back(step(0.3, 0.0, false, 0));
  batch.transitions.push_back(step(0.5, 0.8, true, 0));
  batch.episodes = 1;
  compute_gae(batch, 1.0, 0.95);

  REQUIRE(batch.advantages.size() == 2);
  CHECK(batch.advantages[0] == doctest::Approx(0.485).epsilon(1e-12));
  CHECK(batch.advantages[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(batch.returns[0] == doctest::Approx(0.785).epsilon(1e-12));
  CHECK(batch.returns[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("lambda zero collapses to one-step TD residuals") {
  TrajectoryBatch batch = random_batch(4, 6);
  compute_gae(batch, 0.9, 0.0);
  for (std::size_t t = 0; t < batch.transitions.size(); ++t) {
    const auto& tr = batch.transitions[t];
    const double next_value = tr.done ? 0.0 : batch.transitions[t + 1].value;
    const double delta = tr.reward + 0.9 * next_value - tr.value;
    CHECK(batch.advantages[t] == doctest::Approx(delta).epsilon(1e-12));
  }
}

TEST_CASE("recursive result equals the direct double loop on random episodes") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrajectoryBatch batch = random_batch(seed, 10);
    const auto want = brute_force_gae(batch.transitions, 1.0, 0.95);
    compute_gae(batch, 1.0, 0.95);
    REQUIRE(batch.advantages.size() == want.size());
    for (std::size_t t = 0; t < want.size(); ++t) {
      CHECK(std::abs(batch.advantages[t] - want[t]) < 1e-10);
      CHECK(std::abs(batch.returns[t] - (want[t] + batch.transitions[t].value)) < 1e-10);
    }
  }
  // discounted variant too
  TrajectoryBatch batch = random_batch(99, 10);
  const auto want = brute_force_gae(batch.transitions, 0.97, 0.8);
  compute_gae(batch, 0.97, 0.8);
  for (std::size_t t = 0; t < want.size(); ++t) {
    CHECK(std::abs(batch.advantages[t] - want[t]) < 1e-10);
  }
}

TEST_CASE("advantages never leak across episode boundaries") {
  TrajectoryBatch batch;
  batch.transitions.push_back(step(0.1, 1.0, true, 0));
  batch.transitions.push_back(step(0.4, 0.0, false, 1));
  batch.transitions.push_back(step(0.2, 0.6, true, 1));
  batch.episodes = 2;
  compute_gae(batch, 1.0, 0.95);
  // episode 0 is unaffected by episode 1's values
  CHECK(batch.advantages[0] == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("batches that break the episode contract are rejected") {
  SUBCASE("batch not ending on an episode boundary") {
    TrajectoryBatch batch;
    batch.transitions.push_back(step(0.3, 0.0, false, 0));
    batch.episodes = 1;
    CHECK_THROWS_AS(compute_gae(batch, 1.0, 0.95), InvalidInputError);
  }
  SUBCASE("episode id changes without a done flag") {
    TrajectoryBatch batch;
    batch.transitions.push_back(step(0.3, 0.0, false, 0));
    batch.transitions.push_back(step(0.5, 0.8, true, 1));
    batch.episodes = 2;
    CHECK_THROWS_AS(compute_gae(batch, 1.0, 0.95), InvalidInputError);
  }
  SUBCASE("empty batch is a no-op") {
    TrajectoryBatch batch;
    CHECK_NOTHROW(compute_gae(batch, 1.0, 0.95));
    CHECK(batch.advantages.empty());
  }
}
