#include "negrl/protocol.hpp"

namespace negrl {

SessionState SessionState::start(int deadline, int first_turn) {
  if (deadline < 1) throw InvalidInputError("deadline must be at least 1 round");
  if (first_turn != 0 && first_turn != 1) {
    throw InvalidInputError("first turn must be agent 0 or 1");
  }
  SessionState s;
  s.deadline = deadline;
  s.turn = first_turn;
  return s;
}

std::optional<EpisodeResult> step(SessionState& state, const Action& action,
                                  const Domain& domain,
                                  const UtilityFunction& utility0,
                                  const UtilityFunction& utility1) {
  if (!state.running()) {
    throw ProtocolViolationError("action taken after the session ended");
  }

  if (std::holds_alternative<Accept>(action)) {
    const Outcome* standing = state.standing_offer();
    if (standing == nullptr) {
      throw ProtocolViolationError("accept with no standing offer");
    }
    state.status = SessionStatus::kAgreement;
    EpisodeResult result;
    result.agreement = *standing;
    result.utilities[0] = utility(utility0, domain, *standing);
    result.utilities[1] = utility(utility1, domain, *standing);
    result.rounds_used = state.round;
    return result;
  }

  const Offer& offer = std::get<Offer>(action);
  domain.check_outcome(offer.outcome);
  state.history.emplace_back(state.turn, offer.outcome);
  state.round += 1;
  if (state.round >= state.deadline) {
    state.status = SessionStatus::kFailed;
    EpisodeResult result;
    result.rounds_used = state.round;
    return result;
  }
  state.turn = 1 - state.turn;
  return std::nullopt;
}

}  // namespace negrl
