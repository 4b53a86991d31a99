#include <cmath>

#include "doctest.h"
#include "sublab/games.hpp"
#include "support/generators.hpp"

using namespace sublab;

namespace {

Policy constant(ActionIndex a) {
  return [a](StateIndex, Rng&) { return a; };
}

// Writes on exactly `day`; 0 means never.
Policy write_on(int day) {
  return [day](StateIndex s, Rng&) {
    const int t = static_cast<int>(s / 2) + 1;
    return t == day ? procrastination::kWrite : procrastination::kProcrastinate;
  };
}

// Sophisticated planner by direct recursion on "what will my future self do".
int recursive_sophisticated(const ProcrastinationSpec& spec, double beta, double delta, int t) {
  const int h = spec.horizon();
  if (t == h) return h;
  const int tau = recursive_sophisticated(spec, beta, delta, t + 1);
  const double now = -spec.cost(t) + beta * std::pow(delta, h - t) * spec.final_reward;
  const double later = beta * (std::pow(delta, tau - t) * -spec.cost(tau) + std::pow(delta, h - t) * spec.final_reward);
  return now > later ? t : tau;
}

}  // namespace

TEST_SUITE("games") {
  TEST_CASE("game names round-trip") {
    for (Game g : {Game::Ultimatum, Game::Marshmallow, Game::Gamble, Game::Procrastination}) {
      CHECK(game_from_string(to_string(g)) == g);
    }
    CHECK_THROWS_AS(game_from_string("chess"), std::invalid_argument);
    CHECK(wait_variant_from_string("15min") == WaitVariant::FifteenMinutes);
    CHECK(wait_variant_from_string("two_hours") == WaitVariant::TwoHours);
  }

  TEST_CASE("ultimatum responder MDP pays the offer on accept") {
    const UltimatumSpec spec{10};
    for (int x = 0; x <= 10; ++x) {
      const auto env = build_env(spec, x);
      CHECK(rollout(constant(ultimatum::kAccept), env, 0).raw_return() == x);
      CHECK(rollout(constant(ultimatum::kReject), env, 0).raw_return() == 0.0);
    }
    CHECK(ultimatum_nash_responder(0) == ResponderChoice::Indifferent);
    CHECK(ultimatum_nash_responder(1) == ResponderChoice::Accept);
    CHECK_THROWS_AS(build_env(spec, 11), std::invalid_argument);
    CHECK_THROWS_AS(UltimatumSpec{0}.validate(), std::invalid_argument);
  }

  TEST_CASE("marshmallow returns one now or two after waiting") {
    const auto env = build_env(MarshmallowSpec{});
    const auto take = rollout(constant(marshmallow::kTakeNow), env, 0);
    CHECK(take.raw_return() == 1.0);
    CHECK(take.steps.size() == 1);
    const auto wait = rollout(constant(marshmallow::kWait), env, 0);
    CHECK(wait.raw_return() == 2.0);
    CHECK(discounted_return(wait, Exponential{0.3}) == doctest::Approx(0.6));
    CHECK_THROWS_AS((MarshmallowSpec{2.0, 1.0}.validate()), std::invalid_argument);
  }

  TEST_CASE("gamble state indexing lists winners first") {
    const GambleSpec spec;
    CHECK(spec.state_count() == 10);
    for (StateIndex s = 0; s < spec.state_count(); ++s) CHECK(spec.state_index(spec.state_at(s)) == s);
    CHECK(spec.state_at(0).role == GambleRole::Winner);
    CHECK(spec.state_at(5) == GambleState{GambleRole::Loser, 0.0});
    CHECK_THROWS_AS(spec.state_index({GambleRole::Winner, 0.15}), std::invalid_argument);
    CHECK_THROWS_AS(spec.state_at(10), std::out_of_range);
  }

  TEST_CASE("gamble decision oracles") {
    const GambleSpec spec;
    // Brute-force expected value from the raw rules, independent of Lottery.
    for (StateIndex s = 0; s < spec.state_count(); ++s) {
      const auto gs = spec.state_at(s);
      const double ev = gs.role == GambleRole::Winner ? (0.5 + gs.epsilon) * 10.0 : -(0.5 + gs.epsilon) * 10.0;
      const double keep = gs.role == GambleRole::Winner ? 5.0 : -5.0;
      CHECK(expected_utility(accept_lottery(spec, gs)) == doctest::Approx(ev));
      CHECK(rational_gamble_decision(spec, gs) == (ev >= keep ? gamble::kAccept : gamble::kReject));
    }
    const bool winner_accepts[] = {false, false, false, true, true};
    const bool loser_accepts[] = {true, true, false, false, false};
    for (std::size_t i = 0; i < 5; ++i) {
      const double e = spec.epsilons[i];
      CAPTURE(e);
      CHECK((prospect_gamble_decision(spec, {GambleRole::Winner, e}) == gamble::kAccept) == winner_accepts[i]);
      CHECK((prospect_gamble_decision(spec, {GambleRole::Loser, e}) == gamble::kAccept) == loser_accepts[i]);
    }
  }

  TEST_CASE("property: sampled gamble payoffs average to the expected value") {
    const GambleSpec spec;
    for (StateIndex s = 0; s < spec.state_count(); ++s) {
      const auto gs = spec.state_at(s);
      const auto env = build_env(spec, gs);
      const auto stats = evaluate_policy(constant(gamble::kAccept), env, Exponential{1.0}, 20000, s);
      CHECK(stats.mean == doctest::Approx(expected_utility(accept_lottery(spec, gs))).epsilon(0.03));
      CHECK(rollout(constant(gamble::kReject), env, s).raw_return() == reject_payoff(spec, gs));
    }
  }

  TEST_CASE("prospect env pays deterministic prospect utilities") {
    const GambleSpec spec;
    const auto env = build_prospect_env(spec, {});
    for (StateIndex s = 0; s < spec.state_count(); ++s) {
      const auto gs = spec.state_at(s);
      Rng rng(s);
      CHECK(env.step(s, gamble::kAccept, rng).reward ==
            doctest::Approx(prospect_utility(accept_lottery(spec, gs), framing(gs))));
      CHECK(env.step(s, gamble::kReject, rng).reward == doctest::Approx(prospect_value(reject_payoff(spec, gs))));
    }
  }

  TEST_CASE("procrastination schedules") {
    const auto four = ProcrastinationSpec::four_day();
    CHECK(four.costs == std::vector<double>{1, 2, 4, 7});
    CHECK(four.final_reward == 14.0);
    const auto ten = ProcrastinationSpec::ten_day();
    CHECK(ten.horizon() == 10);
    CHECK(ten.cost(10) == 55.0);
    CHECK(ten.final_reward == 110.0);
    CHECK(ProcrastinationSpec::from_recurrence(4).costs == std::vector<double>{1, 3, 6, 10});
    CHECK_THROWS_AS(ProcrastinationSpec::from_recurrence(0), std::invalid_argument);
    CHECK_THROWS_AS((ProcrastinationSpec{{1, 1}, 4, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ProcrastinationSpec{{1, 2}, 4, 1}.validate()), std::invalid_argument);
  }

  TEST_CASE("procrastination MDP returns R - c_t for a day-t writer and -K R for never") {
    for (const auto& spec : {ProcrastinationSpec::four_day(), ProcrastinationSpec::ten_day()}) {
      const auto env = build_env(spec);
      for (int t = 1; t <= spec.horizon(); ++t) {
        const auto traj = rollout(write_on(t), env, 0);
        CHECK(traj.steps.size() == static_cast<std::size_t>(spec.horizon()));
        CHECK(traj.raw_return() == doctest::Approx(spec.final_reward - spec.cost(t)));
      }
      CHECK(rollout(write_on(0), env, 0).raw_return() == doctest::Approx(-2.0 * spec.final_reward));
      // Writing twice costs only once.
      CHECK(rollout(constant(procrastination::kWrite), env, 0).raw_return() ==
            doctest::Approx(spec.final_reward - spec.cost(1)));
      CHECK(rational_write_day(spec) == 1);
    }
  }

  TEST_CASE("quasi-hyperbolic planners on the four-day schedule") {
    const auto spec = ProcrastinationSpec::four_day();
    const auto soph = qh_write_day(spec, {0.4, 1.0}, PlannerKind::Sophisticated);
    const auto naive = qh_write_day(spec, {0.4, 1.0}, PlannerKind::Naive);
    CHECK(soph.decision_day == 2);
    CHECK(naive.decision_day == 4);
    CHECK(naive.days.size() == 4);
    CHECK(naive.days[0].planned_day == 2);
    CHECK(soph.days[0].planned_day == 2);
    CHECK(soph.days[0].write_value == doctest::Approx(4.6));
    CHECK(soph.days[0].procrastinate_value == doctest::Approx(4.8));
    CHECK(qh_write_day(spec, {1.0, 1.0}, PlannerKind::Naive).decision_day == 1);
    CHECK(qh_write_day(spec, {1.0, 1.0}, PlannerKind::Sophisticated).decision_day == 1);
  }

  TEST_CASE("property: sophisticated planner matches the recursive oracle and never writes later than naive") {
    Rng rng(51);
    for (int h : {4, 10}) {
      const auto spec = h == 4 ? ProcrastinationSpec::four_day() : ProcrastinationSpec::ten_day();
      for (int b = 1; b <= 10; ++b) {
        const double beta = b / 10.0;
        const int soph = qh_write_day(spec, {beta, 1.0}, PlannerKind::Sophisticated).decision_day;
        const int naive = qh_write_day(spec, {beta, 1.0}, PlannerKind::Naive).decision_day;
        CAPTURE(h);
        CAPTURE(beta);
        CHECK(soph == recursive_sophisticated(spec, beta, 1.0, 1));
        CHECK(soph <= naive);
      }
    }
    for (int trial = 0; trial < 200; ++trial) {
      const int h = static_cast<int>(gen::size(rng, 1, 12));
      const auto spec = ProcrastinationSpec::from_recurrence(h);
      const double beta = gen::real(rng, 0.0, 1.0);
      const double delta = gen::real(rng, 0.5, 1.0);
      const int soph = qh_write_day(spec, {beta, delta}, PlannerKind::Sophisticated).decision_day;
      const int naive = qh_write_day(spec, {beta, delta}, PlannerKind::Naive).decision_day;
      CHECK(soph == recursive_sophisticated(spec, beta, delta, 1));
      CHECK(soph <= naive);
      CHECK(soph >= 1);
      CHECK(naive <= h);
    }
  }
}
