#include "negrl/opponents.hpp"

#include <algorithm>
#include <cmath>

namespace negrl {

void OpponentSpec::validate() const {
  if (!(concession_exponent > 0.0)) {
    throw InvalidInputError("concession exponent must be positive");
  }
  if (!(reservation >= 0.0 && reservation < 1.0)) {
    throw InvalidInputError("reservation must be in [0,1)");
  }
  // any real: below 0 accepts every offer, 1 or above accepts none
  if (!std::isfinite(accept_threshold)) {
    throw InvalidInputError("accept threshold must be finite");
  }
}

OpponentSpec opponent_spec(OpponentKind kind) {
  OpponentSpec spec;
  spec.kind = kind;
  switch (kind) {
    case OpponentKind::kBoulware: spec.concession_exponent = 0.2; break;
    case OpponentKind::kConceder: spec.concession_exponent = 2.0; break;
    case OpponentKind::kLinear: spec.concession_exponent = 1.0; break;
    case OpponentKind::kRandom: break;
  }
  return spec;
}

OpponentSpec opponent_spec_by_name(const std::string& name) {
  if (name == "boulware") return opponent_spec(OpponentKind::kBoulware);
  if (name == "conceder") return opponent_spec(OpponentKind::kConceder);
  if (name == "linear") return opponent_spec(OpponentKind::kLinear);
  if (name == "random") return opponent_spec(OpponentKind::kRandom);
  throw ConfigError("unknown opponent '" + name +
                    "' (expected boulware|conceder|linear|random)");
}

std::string opponent_name(const OpponentSpec& spec) {
  switch (spec.kind) {
    case OpponentKind::kBoulware: return "boulware";
    case OpponentKind::kConceder: return "conceder";
    case OpponentKind::kLinear: return "linear";
    case OpponentKind::kRandom: return "random";
  }
  return "unknown";
}

std::vector<OpponentSpec> baseline_opponents() {
  return {opponent_spec(OpponentKind::kBoulware), opponent_spec(OpponentKind::kConceder),
          opponent_spec(OpponentKind::kLinear), opponent_spec(OpponentKind::kRandom)};
}

double target_utility(const OpponentSpec& spec, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw InvalidInputError("progress must be in [0,1]");
  }
  return 1.0 - (1.0 - spec.reservation) *
                   std::pow(progress, 1.0 / spec.concession_exponent);
}

namespace {

class BaselineOpponent : public Opponent {
 public:
  explicit BaselineOpponent(const OpponentSpec& spec) : spec_(spec), rng_(0) {
    spec_.validate();
  }

  void reset(const Domain& domain, const UtilityFunction& own_utility,
             std::uint64_t seed) override {
    domain_ = domain;
    utility_ = own_utility;
    rng_ = Rng(seed);
    if (spec_.kind != OpponentKind::kRandom) {
      // Precompute all outcomes sorted ascending by own utility. The stable
      // sort keeps lexicographic order among equal utilities.
      auto outcomes = enumerate_outcomes(domain, domain.outcome_space_size());
      sorted_.clear();
      sorted_.reserve(outcomes.size());
      for (auto& outcome : outcomes) {
        sorted_.push_back({utility(utility_, domain_, outcome), std::move(outcome)});
      }
      std::stable_sort(sorted_.begin(), sorted_.end(),
                       [](const Entry& a, const Entry& b) { return a.value < b.value; });
    }
  }

  Action act(const SessionState& session) override {
    if (!session.running()) {
      throw ProtocolViolationError("opponent asked to act on a finished session");
    }
    const Outcome* standing = session.standing_offer();

    if (spec_.kind == OpponentKind::kRandom) {
      if (standing != nullptr &&
          utility(utility_, domain_, *standing) > spec_.accept_threshold) {
        return Accept{};
      }
      return Offer{random_outcome()};
    }

    const double target = target_utility(spec_, session.progress());
    if (standing != nullptr && utility(utility_, domain_, *standing) >= target) {
      return Accept{};
    }
    // Cheapest outcome that still meets the target; best outcome if none does.
    auto it = std::lower_bound(
        sorted_.begin(), sorted_.end(), target,
        [](const Entry& entry, double t) { return entry.value < t; });
    if (it == sorted_.end()) --it;
    return Offer{it->outcome};
  }

 private:
  struct Entry {
    double value;
    Outcome outcome;
  };

  Outcome random_outcome() {
    Outcome outcome(static_cast<std::size_t>(domain_.num_objectives()));
    for (int b = 0; b < domain_.num_objectives(); ++b) {
      outcome[static_cast<std::size_t>(b)] =
          static_cast<int>(rng_.uniform_int(0, domain_.value_count(b) - 1));
    }
    return outcome;
  }

  OpponentSpec spec_;
  Domain domain_;
  UtilityFunction utility_;
  std::vector<Entry> sorted_;
  Rng rng_;
};

}  // namespace

std::unique_ptr<Opponent> make_opponent(const OpponentSpec& spec) {
  return std::make_unique<BaselineOpponent>(spec);
}

}  // namespace negrl
