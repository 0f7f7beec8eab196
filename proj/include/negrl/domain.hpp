#pragma once

#include <cstdint>
#include <vector>

#include "negrl/errors.hpp"

namespace negrl {

/// One complete assignment of a value index to every objective.
using Outcome = std::vector<int>;

/// Structure of a negotiation problem: the list of objectives and, per
/// objective, how many discrete values there are to choose from. Values are
/// identified by index 0..size-1.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<int> value_set_sizes);

  int num_objectives() const { return static_cast<int>(sizes_.size()); }
  int value_count(int objective) const { return sizes_[objective]; }
  const std::vector<int>& value_set_sizes() const { return sizes_; }

  /// Total outcome-space size (product of all value-set sizes).
  std::uint64_t outcome_space_size() const { return outcome_count_; }

  bool is_valid_outcome(const Outcome& outcome) const;
  void check_outcome(const Outcome& outcome) const;

  bool operator==(const Domain& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<int> sizes_;
  std::uint64_t outcome_count_ = 0;
};

/// Additive preference model over a domain: objective weights summing to 1
/// and per-objective value weights spanning [0, 1].
struct UtilityFunction {
  std::vector<double> objective_weights;
  std::vector<std::vector<double>> value_weights;

  /// Throws InvalidInputError if the normalization invariants are violated
  /// (weight sums, per-objective min/max) beyond `tolerance`.
  void validate(const Domain& domain, double tolerance = 1e-9) const;
};

/// Additive utility of `outcome`: sum over objectives of
/// objective_weight * value_weight. Always in [0, 1] for a valid function.
double utility(const UtilityFunction& u_fn, const Domain& domain,
               const Outcome& outcome);

/// All outcomes of the domain in lexicographic order of value indices.
/// Throws CapacityError if the outcome space exceeds `cap`.
std::vector<Outcome> enumerate_outcomes(const Domain& domain,
                                        std::uint64_t cap = 10000);

/// A shared domain plus both agents' private utility functions.
struct NegotiationProblem {
  Domain domain;
  UtilityFunction utilities[2];

  void validate(double tolerance = 1e-9) const;
};

}  // namespace negrl
