#include "negrl/problem_gen.hpp"

#include <algorithm>
#include <string>

namespace negrl {

namespace {
enum StreamTag : std::uint64_t { kTagDomain = 1, kTagUtility0 = 2, kTagUtility1 = 3 };
}

void GeneratorConfig::validate() const {
  if (min_objectives < 1 || min_objectives > max_objectives) {
    throw ConfigError("generator: need 1 <= min_objectives <= max_objectives");
  }
  if (min_outcomes <= 1 || min_outcomes > max_outcomes) {
    throw ConfigError("generator: need 1 < min_outcomes <= max_outcomes");
  }
  if (min_values < 2 || min_values > max_values) {
    throw ConfigError("generator: need 2 <= min_values <= max_values");
  }
  if (max_attempts < 1) throw ConfigError("generator: max_attempts must be positive");
}

Domain generate_domain(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const int m = static_cast<int>(
        rng.uniform_int(config.min_objectives, config.max_objectives));
    std::vector<int> sizes(static_cast<std::size_t>(m));
    std::uint64_t product = 1;
    bool overflow = false;
    for (int& s : sizes) {
      s = static_cast<int>(rng.uniform_int(config.min_values, config.max_values));
      if (product > config.max_outcomes) overflow = true;  // early bail, keep draws
      product *= static_cast<std::uint64_t>(s);
    }
    if (!overflow && product >= config.min_outcomes && product <= config.max_outcomes) {
      return Domain(sizes);
    }
  }
  throw GenerationError("no domain satisfying the outcome bounds found in " +
                        std::to_string(config.max_attempts) + " attempts");
}

UtilityFunction generate_utility(const Domain& domain, Rng& rng) {
  const int m = domain.num_objectives();
  UtilityFunction u;
  u.objective_weights.resize(static_cast<std::size_t>(m));
  double total = 0.0;
  for (double& w : u.objective_weights) {
    w = rng.uniform_open();
    total += w;
  }
  for (double& w : u.objective_weights) w /= total;

  u.value_weights.resize(static_cast<std::size_t>(m));
  for (int b = 0; b < m; ++b) {
    auto& vw = u.value_weights[static_cast<std::size_t>(b)];
    vw.resize(static_cast<std::size_t>(domain.value_count(b)));
    double lo, hi;
    do {
      lo = 1.0;
      hi = 0.0;
      for (double& w : vw) {
        w = rng.uniform();
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
    } while (hi == lo);  // degenerate draw, retry
    for (double& w : vw) w = (w - lo) / (hi - lo);
  }
  return u;
}

NegotiationProblem generate_problem(const GeneratorConfig& config,
                                    std::uint64_t problem_seed) {
  NegotiationProblem problem;
  Rng domain_rng = make_rng(problem_seed, {kTagDomain});
  problem.domain = generate_domain(config, domain_rng);
  Rng u0_rng = make_rng(problem_seed, {kTagUtility0});
  Rng u1_rng = make_rng(problem_seed, {kTagUtility1});
  problem.utilities[0] = generate_utility(problem.domain, u0_rng);
  problem.utilities[1] = generate_utility(problem.domain, u1_rng);
  return problem;
}

}  // namespace negrl
