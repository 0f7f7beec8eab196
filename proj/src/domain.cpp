#include "negrl/domain.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace negrl {

Domain::Domain(std::vector<int> value_set_sizes) : sizes_(std::move(value_set_sizes)) {
  if (sizes_.empty()) throw InvalidInputError("domain needs at least one objective");
  outcome_count_ = 1;
  for (int s : sizes_) {
    if (s < 2) throw InvalidInputError("every objective needs at least 2 values");
    const std::uint64_t next = outcome_count_ * static_cast<std::uint64_t>(s);
    if (next / static_cast<std::uint64_t>(s) != outcome_count_) {
      throw InvalidInputError("outcome-space size overflows 64 bits");
    }
    outcome_count_ = next;
  }
}

bool Domain::is_valid_outcome(const Outcome& outcome) const {
  if (outcome.size() != sizes_.size()) return false;
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    if (outcome[b] < 0 || outcome[b] >= sizes_[b]) return false;
  }
  return true;
}

void Domain::check_outcome(const Outcome& outcome) const {
  if (outcome.size() != sizes_.size()) {
    throw InvalidInputError("outcome has " + std::to_string(outcome.size()) +
                            " entries for a domain with " +
                            std::to_string(sizes_.size()) + " objectives");
  }
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    if (outcome[b] < 0 || outcome[b] >= sizes_[b]) {
      throw InvalidInputError("value index " + std::to_string(outcome[b]) +
                              " out of range for objective " + std::to_string(b));
    }
  }
}

void UtilityFunction::validate(const Domain& domain, double tolerance) const {
  const std::size_t m = static_cast<std::size_t>(domain.num_objectives());
  if (objective_weights.size() != m || value_weights.size() != m) {
    throw InvalidInputError("utility function shape does not match domain");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    const double w = objective_weights[b];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw InvalidInputError("objective weight out of [0,1] at objective " +
                              std::to_string(b));
    }
    sum += w;
    const auto& vw = value_weights[b];
    if (vw.size() != static_cast<std::size_t>(domain.value_count(static_cast<int>(b)))) {
      throw InvalidInputError("value weight count mismatch at objective " +
                              std::to_string(b));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : vw) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InvalidInputError("value weight out of [0,1] at objective " +
                                std::to_string(b));
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (std::abs(hi - 1.0) > tolerance || std::abs(lo) > tolerance) {
      throw InvalidInputError("value weights of objective " + std::to_string(b) +
                              " must span [0,1]");
    }
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw InvalidInputError("objective weights sum to " + std::to_string(sum) +
                            ", expected 1");
  }
}

double utility(const UtilityFunction& u_fn, const Domain& domain,
               const Outcome& outcome) {
  domain.check_outcome(outcome);
  if (u_fn.objective_weights.size() != outcome.size()) {
    throw InvalidInputError("utility function does not match outcome length");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < outcome.size(); ++b) {
    total += u_fn.objective_weights[b] *
             u_fn.value_weights[b][static_cast<std::size_t>(outcome[b])];
  }
  return total;
}

std::vector<Outcome> enumerate_outcomes(const Domain& domain, std::uint64_t cap) {
  if (domain.outcome_space_size() > cap) {
    throw CapacityError("outcome space of size " +
                        std::to_string(domain.outcome_space_size()) +
                        " exceeds enumeration cap " + std::to_string(cap));
  }
  const int m = domain.num_objectives();
  std::vector<Outcome> all;
  all.reserve(static_cast<std::size_t>(domain.outcome_space_size()));
  Outcome current(static_cast<std::size_t>(m), 0);
  while (true) {
    all.push_back(current);
    int b = m - 1;
    while (b >= 0) {
      if (++current[static_cast<std::size_t>(b)] < domain.value_count(b)) break;
      current[static_cast<std::size_t>(b)] = 0;
      --b;
    }
    if (b < 0) break;
  }
  return all;
}

void NegotiationProblem::validate(double tolerance) const {
  utilities[0].validate(domain, tolerance);
  utilities[1].validate(domain, tolerance);
}

}  // namespace negrl
