#include "negrl/flat_policy.hpp"

namespace negrl {

FlatObservation encode_flat_observation(const Domain& domain, const HistoryStats& stats,
                                        int round, int deadline) {
  if (deadline < 1) throw InvalidInputError("deadline must be positive");
  if (round < 0 || round > deadline) throw InvalidInputError("round outside [0, deadline]");
  if (!(stats.domain() == domain)) {
    throw InvalidInputError("history statistics belong to a different domain");
  }

  FlatObservation obs;
  obs.group_sizes = domain.value_set_sizes();
  obs.features.resize(flat_feature_width(obs.group_sizes));
  Eigen::Index i = 0;
  for (int b = 0; b < domain.num_objectives(); ++b) {
    for (int v = 0; v < domain.value_count(b); ++v) {
      obs.features[i++] = stats.last_offer_flag(Side::kOpponent, b, v) ? 1.0 : 0.0;
      obs.features[i++] = stats.last_offer_flag(Side::kSelf, b, v) ? 1.0 : 0.0;
      obs.features[i++] = stats.offer_fraction(Side::kOpponent, b, v);
      obs.features[i++] = stats.offer_fraction(Side::kSelf, b, v);
    }
  }
  obs.features[i++] = static_cast<double>(round) / static_cast<double>(deadline);
  obs.has_standing_offer = stats.offer_count(Side::kOpponent) > 0;
  return obs;
}

}  // namespace negrl
