#include <doctest.h>

#include <cmath>
#include <limits>

#include "negrl/opponents.hpp"
#include "negrl/problem_gen.hpp"

using namespace negrl;

TEST_CASE("target utility endpoints and worked values") {
  for (const auto& spec : baseline_opponents()) {
    if (spec.kind == OpponentKind::kRandom) continue;
    CHECK(target_utility(spec, 0.0) == doctest::Approx(1.0));
    CHECK(target_utility(spec, 1.0) == doctest::Approx(spec.reservation));
  }
  CHECK(target_utility(opponent_spec(OpponentKind::kLinear), 0.5) == doctest::Approx(0.5));
  CHECK(target_utility(opponent_spec(OpponentKind::kBoulware), 0.5) ==
        doctest::Approx(1.0 - std::pow(0.5, 5.0)).epsilon(1e-12));  // 0.96875
  CHECK_THROWS_AS(target_utility(opponent_spec(OpponentKind::kLinear), 1.5), InvalidInputError);
  CHECK_THROWS_AS(target_utility(opponent_spec(OpponentKind::kLinear), -0.1), InvalidInputError);
}

TEST_CASE("targets are ordered boulware >= linear >= conceder on (0,1)") {
  const OpponentSpec b = opponent_spec(OpponentKind::kBoulware);
  const OpponentSpec l = opponent_spec(OpponentKind::kLinear);
  const OpponentSpec c = opponent_spec(OpponentKind::kConceder);
  double prev_b = 1.0, prev_l = 1.0, prev_c = 1.0;
  for (int i = 1; i < 100; ++i) {
    const double p = i / 100.0;
    const double tb = target_utility(b, p), tl = target_utility(l, p), tc = target_utility(c, p);
    CHECK(tb >= tl);
    CHECK(tl >= tc);
    CHECK(tb <= prev_b);  // non-increasing
    CHECK(tl <= prev_l);
    CHECK(tc <= prev_c);
    prev_b = tb;
    prev_l = tl;
    prev_c = tc;
  }
}

TEST_CASE("names round-trip") {
  for (const auto& spec : baseline_opponents()) {
    const OpponentSpec again = opponent_spec_by_name(opponent_name(spec));
    CHECK(again.kind == spec.kind);
    CHECK(again.concession_exponent == spec.concession_exponent);
  }
  CHECK_THROWS_AS(opponent_spec_by_name("hardliner"), ConfigError);
}

TEST_CASE("random agent accepts strictly above its threshold") {
  // u0 over domain (2,2): value utilities 0, 0.6 and 0.61 reachable
  const Domain d{{2, 2}};
  UtilityFunction mine;
  mine.objective_weights = {0.61, 0.39};
  mine.value_weights = {{0.0, 1.0}, {0.0, 1.0}};
  mine.validate(d);

  auto agent = make_opponent(opponent_spec(OpponentKind::kRandom));
  agent->reset(d, mine, 0);

  SessionState at_threshold = SessionState::start(40, 0);
  at_threshold.history = {{0, {1, 0}}};  // worth exactly 0.61 > 0.6 -> accept
  at_threshold.round = 1;
  at_threshold.turn = 1;
  CHECK(std::holds_alternative<Accept>(agent->act(at_threshold)));

  UtilityFunction exact;
  exact.objective_weights = {0.6, 0.4};
  exact.value_weights = {{0.0, 1.0}, {0.0, 1.0}};
  exact.validate(d);
  agent->reset(d, exact, 0);
  SessionState below = SessionState::start(40, 0);
  below.history = {{0, {1, 0}}};  // worth exactly 0.60 -> strict inequality, counter-offer
  below.round = 1;
  below.turn = 1;
  CHECK(std::holds_alternative<Offer>(agent->act(below)));
}

TEST_CASE("time-dependent offers always meet the current target") {
  const NegotiationProblem p = generate_problem(GeneratorConfig{}, 11);
  for (const auto& spec : baseline_opponents()) {
    if (spec.kind == OpponentKind::kRandom) continue;
    auto agent = make_opponent(spec);
    agent->reset(p.domain, p.utilities[1], 7);
    SessionState s = SessionState::start(40, 1);
    for (int t = 0; t < 39; ++t) {
      s.round = t;
      s.turn = 1;
      const Action a = agent->act(s);
      if (std::holds_alternative<Offer>(a)) {
        const double own = utility(p.utilities[1], p.domain, std::get<Offer>(a).outcome);
        CHECK(own >= target_utility(spec, s.progress()) - 1e-12);
      }
    }
  }
}

TEST_CASE("boulware counter-offers a high-value outcome at midgame") {
  const NegotiationProblem p = generate_problem(GeneratorConfig{}, 23);
  auto agent = make_opponent(opponent_spec(OpponentKind::kBoulware));
  agent->reset(p.domain, p.utilities[0], 3);

  // find an outcome worth < 0.96875 to stand as the opponent's offer
  const auto outcomes = enumerate_outcomes(p.domain);
  Outcome weak;
  for (const auto& w : outcomes) {
    if (utility(p.utilities[0], p.domain, w) < 0.9) {
      weak = w;
      break;
    }
  }
  REQUIRE_FALSE(weak.empty());

  SessionState s = SessionState::start(40, 1);
  s.history = {{1, weak}};
  s.round = 20;  // progress 0.5
  s.turn = 0;
  const Action a = agent->act(s);
  REQUIRE(std::holds_alternative<Offer>(a));
  const double own = utility(p.utilities[0], p.domain, std::get<Offer>(a).outcome);
  CHECK(own >= 0.96875 - 1e-12);
  CHECK(own <= 1.0 + 1e-12);
}

TEST_CASE("two conceders always agree before the deadline") {
  GeneratorConfig config;
  config.seed = 29;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const NegotiationProblem p = generate_problem(config, i);
    auto a0 = make_opponent(opponent_spec(OpponentKind::kConceder));
    auto a1 = make_opponent(opponent_spec(OpponentKind::kConceder));
    a0->reset(p.domain, p.utilities[0], 2 * i);
    a1->reset(p.domain, p.utilities[1], 2 * i + 1);
    SessionState s = SessionState::start(40, static_cast<int>(i % 2));
    std::optional<EpisodeResult> result;
    while (!result.has_value()) {
      Opponent& mover = s.turn == 0 ? *a0 : *a1;
      result = step(s, mover.act(s), p.domain, p.utilities[0], p.utilities[1]);
    }
    CHECK(result->agreement.has_value());
    CHECK(result->rounds_used <= 40);
  }
}

TEST_CASE("spec validation") {
  OpponentSpec bad = opponent_spec(OpponentKind::kBoulware);
  bad.concession_exponent = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = opponent_spec(OpponentKind::kRandom);
  bad.accept_threshold = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad.accept_threshold = -1.0;  // accepts everything: legal
  CHECK_NOTHROW(bad.validate());
  bad = opponent_spec(OpponentKind::kLinear);
  bad.reservation = 1.0;  // must stay below 1
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
}
