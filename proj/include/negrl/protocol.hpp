#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "negrl/domain.hpp"

namespace negrl {

/// Accept the standing offer. Illegal as the very first action of an episode.
struct Accept {};

/// Propose (or counter-propose) an outcome.
struct Offer {
  Outcome outcome;
};

using Action = std::variant<Accept, Offer>;

enum class SessionStatus { kRunning, kAgreement, kFailed };

/// State machine of one alternating-offers session.
struct SessionState {
  int round = 0;                 ///< offers made so far (t)
  int deadline = 40;             ///< total offers allowed (H)
  int turn = 0;                  ///< agent id whose move it is
  SessionStatus status = SessionStatus::kRunning;
  std::vector<std::pair<int, Outcome>> history;  ///< (agent id, offer)

  static SessionState start(int deadline, int first_turn);

  bool running() const { return status == SessionStatus::kRunning; }
  /// The offer currently on the table, if any.
  const Outcome* standing_offer() const {
    return history.empty() ? nullptr : &history.back().second;
  }
  double progress() const {
    return static_cast<double>(round) / static_cast<double>(deadline);
  }
};

/// Final payoff record of a finished session.
struct EpisodeResult {
  std::optional<Outcome> agreement;
  double utilities[2] = {0.0, 0.0};
  int rounds_used = 0;
};

/// Applies `action` by the agent on turn. Offers append to the history,
/// advance the round counter and flip the turn; reaching the deadline fails
/// the session with zero payoffs. Accept ends the session on the standing
/// offer and pays each agent its own utility of that outcome.
///
/// Returns the episode result when the action ended the session.
/// Throws ProtocolViolationError for actions after a terminal state or an
/// Accept without a standing offer; InvalidInputError for malformed offers.
std::optional<EpisodeResult> step(SessionState& state, const Action& action,
                                  const Domain& domain,
                                  const UtilityFunction& utility0,
                                  const UtilityFunction& utility1);

}  // namespace negrl
