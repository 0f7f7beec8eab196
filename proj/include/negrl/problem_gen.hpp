#pragma once

#include <cstdint>

#include "negrl/domain.hpp"
#include "negrl/rng.hpp"

namespace negrl {

/// Bounds for random problem generation.
struct GeneratorConfig {
  std::uint64_t min_outcomes = 200;
  std::uint64_t max_outcomes = 1000;
  int min_objectives = 3;
  int max_objectives = 7;
  int min_values = 2;    ///< per-objective value-set size bounds
  int max_values = 12;
  int max_attempts = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rejection-samples a domain whose objective count and outcome-space size
/// satisfy the configured bounds. Throws GenerationError after
/// `max_attempts` rejected samples.
Domain generate_domain(const GeneratorConfig& config, Rng& rng);

/// Random additive utility satisfying the normalization invariants exactly:
/// objective weights are normalized uniforms; value weights are uniforms
/// rescaled per objective to span [0, 1].
UtilityFunction generate_utility(const Domain& domain, Rng& rng);

/// Domain plus two independently sampled utility functions, all derived
/// from disjoint substreams of `problem_seed`.
NegotiationProblem generate_problem(const GeneratorConfig& config,
                                    std::uint64_t problem_seed);

}  // namespace negrl
