#include "sublab/games.hpp"

#include <cmath>
#include <stdexcept>

namespace sublab {

std::string to_string(Game game) {
  switch (game) {
    case Game::Ultimatum: return "ultimatum";
    case Game::Marshmallow: return "marshmallow";
    case Game::Gamble: return "gamble";
    case Game::Procrastination: return "procrastination";
  }
  throw std::invalid_argument("unknown game");
}

Game game_from_string(const std::string& name) {
  if (name == "ultimatum") return Game::Ultimatum;
  if (name == "marshmallow") return Game::Marshmallow;
  if (name == "gamble") return Game::Gamble;
  if (name == "procrastination") return Game::Procrastination;
  throw std::invalid_argument("unknown game '" + name + "'");
}

// ---------------------------------------------------------------------------
// Ultimatum

void UltimatumSpec::validate() const {
  if (total < 1) throw std::invalid_argument("ultimatum total must be at least 1");
}

MdpSpec build_env(const UltimatumSpec& spec, std::optional<int> offer) {
  spec.validate();
  if (offer && (*offer < 0 || *offer > spec.total)) {
    throw std::invalid_argument("ultimatum offer " + std::to_string(*offer) + " outside 0.." +
                                std::to_string(spec.total));
  }
  MdpSpec env;
  env.state_count = spec.offer_count();
  env.action_count = 2;
  env.horizon = 1;
  const std::size_t n = spec.offer_count();
  if (offer) {
    const auto fixed = static_cast<StateIndex>(*offer);
    env.initial_state = [fixed](Rng&) { return fixed; };
  } else {
    env.initial_state = [n](Rng& rng) { return rng.index(n); };
  }
  env.step = [](StateIndex x, ActionIndex a, Rng&) {
    return StepOutcome{std::nullopt, a == ultimatum::kAccept ? static_cast<double>(x) : 0.0};
  };
  return env;
}

ResponderChoice ultimatum_nash_responder(int offer, const UltimatumSpec& spec) {
  spec.validate();
  if (offer < 0 || offer > spec.total) throw std::invalid_argument("offer outside 0..T");
  return offer == 0 ? ResponderChoice::Indifferent : ResponderChoice::Accept;
}

// ---------------------------------------------------------------------------
// Marshmallow

std::string to_string(WaitVariant v) {
  return v == WaitVariant::TwoHours ? "2h" : "15min";
}

WaitVariant wait_variant_from_string(const std::string& name) {
  if (name == "2h" || name == "two_hours") return WaitVariant::TwoHours;
  if (name == "15min" || name == "fifteen_minutes") return WaitVariant::FifteenMinutes;
  throw std::invalid_argument("unknown wait variant '" + name + "'");
}

void MarshmallowSpec::validate() const {
  if (!(large_reward > small_reward)) {
    throw std::invalid_argument("marshmallow large reward must exceed the small one");
  }
}

MdpSpec build_env(const MarshmallowSpec& spec) {
  spec.validate();
  MdpSpec env;
  env.state_count = 2;
  env.action_count = 2;
  env.horizon = 2;
  env.initial_state = [](Rng&) { return marshmallow::kDecide; };
  const double small = spec.small_reward;
  const double large = spec.large_reward;
  env.step = [small, large](StateIndex s, ActionIndex a, Rng&) {
    if (s == marshmallow::kWaiting) return StepOutcome{std::nullopt, large};
    if (a == marshmallow::kTakeNow) return StepOutcome{std::nullopt, small};
    return StepOutcome{marshmallow::kWaiting, 0.0};
  };
  return env;
}

// ---------------------------------------------------------------------------
// Gamble

std::string to_string(GambleRole role) { return role == GambleRole::Winner ? "winner" : "loser"; }

void GambleSpec::validate() const {
  if (!(stake > 0.0)) throw std::invalid_argument("gamble stake must be positive");
  if (epsilons.empty()) throw std::invalid_argument("gamble needs at least one epsilon");
  for (double e : epsilons) {
    if (!(e >= 0.0 && e < 0.5)) throw std::invalid_argument("gamble epsilon must lie in [0, 0.5)");
  }
}

StateIndex GambleSpec::state_index(const GambleState& state) const {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (std::abs(epsilons[i] - state.epsilon) < 1e-12) {
      return (state.role == GambleRole::Winner ? 0 : epsilons.size()) + i;
    }
  }
  throw std::invalid_argument("epsilon " + std::to_string(state.epsilon) + " is not on the grid");
}

GambleState GambleSpec::state_at(StateIndex index) const {
  if (index >= state_count()) throw std::out_of_range("gamble state index out of range");
  const std::size_t n = epsilons.size();
  return index < n ? GambleState{GambleRole::Winner, epsilons[index]}
                   : GambleState{GambleRole::Loser, epsilons[index - n]};
}

Lottery accept_lottery(const GambleSpec& spec, const GambleState& state) {
  if (state.role == GambleRole::Winner) {
    const double p_win = 0.5 + state.epsilon;
    return Lottery({{p_win, 2.0 * spec.stake}, {1.0 - p_win, 0.0}});
  }
  const double p_win = 0.5 - state.epsilon;
  return Lottery({{1.0 - p_win, -2.0 * spec.stake}, {p_win, 0.0}});
}

double reject_payoff(const GambleSpec& spec, const GambleState& state) {
  return state.role == GambleRole::Winner ? spec.stake : -spec.stake;
}

Domain framing(const GambleState& state) {
  return state.role == GambleRole::Winner ? Domain::Gain : Domain::Loss;
}

namespace {

MdpSpec gamble_shell(const GambleSpec& spec, std::optional<GambleState> state) {
  spec.validate();
  MdpSpec env;
  env.state_count = spec.state_count();
  env.action_count = 2;
  env.horizon = 1;
  if (state) {
    const StateIndex fixed = spec.state_index(*state);
    env.initial_state = [fixed](Rng&) { return fixed; };
  } else {
    const std::size_t n = spec.state_count();
    env.initial_state = [n](Rng& rng) { return rng.index(n); };
  }
  return env;
}

}  // namespace

MdpSpec build_env(const GambleSpec& spec, std::optional<GambleState> state) {
  MdpSpec env = gamble_shell(spec, state);
  env.step = [spec](StateIndex s, ActionIndex a, Rng& rng) {
    const GambleState gs = spec.state_at(s);
    if (a == gamble::kReject) return StepOutcome{std::nullopt, reject_payoff(spec, gs)};
    // Outcome order matches accept_lottery: first entry is drawn with its probability.
    const Lottery lottery = accept_lottery(spec, gs);
    const auto& outcomes = lottery.outcomes();
    const double payoff = rng.uniform() < outcomes[0].probability ? outcomes[0].payoff
                                                                  : outcomes[1].payoff;
    return StepOutcome{std::nullopt, payoff};
  };
  return env;
}

MdpSpec build_prospect_env(const GambleSpec& spec, const ProspectParams& params) {
  params.validate();
  MdpSpec env = gamble_shell(spec, std::nullopt);
  std::vector<double> accept(spec.state_count()), reject(spec.state_count());
  for (StateIndex s = 0; s < spec.state_count(); ++s) {
    const GambleState gs = spec.state_at(s);
    accept[s] = prospect_utility(accept_lottery(spec, gs), framing(gs), params);
    reject[s] = prospect_value(reject_payoff(spec, gs), params);
  }
  env.step = [accept, reject](StateIndex s, ActionIndex a, Rng&) {
    return StepOutcome{std::nullopt, a == gamble::kAccept ? accept[s] : reject[s]};
  };
  return env;
}

ActionIndex rational_gamble_decision(const GambleSpec& spec, const GambleState& state) {
  spec.validate();
  return expected_utility(accept_lottery(spec, state)) >= reject_payoff(spec, state)
             ? gamble::kAccept
             : gamble::kReject;
}

ActionIndex prospect_gamble_decision(const GambleSpec& spec, const GambleState& state,
                                     const ProspectParams& params) {
  spec.validate();
  params.validate();
  const double accept = prospect_utility(accept_lottery(spec, state), framing(state), params);
  const double reject = prospect_value(reject_payoff(spec, state), params);
  return accept >= reject ? gamble::kAccept : gamble::kReject;
}

// ---------------------------------------------------------------------------
// Procrastination

ProcrastinationSpec ProcrastinationSpec::four_day() { return {{1.0, 2.0, 4.0, 7.0}, 14.0, 2.0}; }

ProcrastinationSpec ProcrastinationSpec::from_recurrence(int horizon) {
  if (horizon < 1) throw std::invalid_argument("procrastination horizon must be at least 1");
  ProcrastinationSpec spec;
  spec.costs.push_back(1.0);
  for (int t = 2; t <= horizon; ++t) spec.costs.push_back(static_cast<double>(t) + spec.costs.back());
  spec.final_reward = 2.0 * spec.costs.back();
  return spec;
}

void ProcrastinationSpec::validate_planning() const {
  if (costs.empty()) throw std::invalid_argument("procrastination horizon must be at least 1");
  for (double c : costs) {
    if (!(c > 0.0)) throw std::invalid_argument("procrastination costs must be positive");
  }
  if (!(final_reward > 0.0)) throw std::invalid_argument("procrastination reward must be positive");
  if (!(penalty_multiplier > 1.0)) throw std::invalid_argument("penalty multiplier K must exceed 1");
}

void ProcrastinationSpec::validate() const {
  validate_planning();
  for (std::size_t i = 1; i < costs.size(); ++i) {
    if (!(costs[i] > costs[i - 1])) {
      throw std::invalid_argument("procrastination costs must be strictly increasing");
    }
  }
}

double procrastination_reward(const ProcrastinationSpec& spec, int day, bool written,
                              ActionIndex action) {
  const bool writes = action == procrastination::kWrite;
  const bool written_after = written || writes;
  double r = 0.0;
  if (writes && !written) r -= spec.cost(day);
  if (day == spec.horizon()) {
    r += written_after ? spec.final_reward : -spec.penalty_multiplier * spec.final_reward;
  }
  return r;
}

MdpSpec build_env(const ProcrastinationSpec& spec) {
  spec.validate();
  MdpSpec env;
  env.state_count = spec.state_count();
  env.action_count = 2;
  env.horizon = static_cast<std::size_t>(spec.horizon());
  env.initial_state = [](Rng&) { return ProcrastinationSpec::state_index(1, false); };
  env.step = [spec](StateIndex s, ActionIndex a, Rng&) {
    const int day = static_cast<int>(s / 2) + 1;
    const bool written = (s % 2) == 1;
    const double r = procrastination_reward(spec, day, written, a);
    if (day == spec.horizon()) return StepOutcome{std::nullopt, r};
    const bool next_written = written || a == procrastination::kWrite;
    return StepOutcome{ProcrastinationSpec::state_index(day + 1, next_written), r};
  };
  return env;
}

int rational_write_day(const ProcrastinationSpec& spec) {
  spec.validate_planning();
  int best = 1;
  for (int t = 2; t <= spec.horizon(); ++t) {
    if (spec.final_reward - spec.cost(t) > spec.final_reward - spec.cost(best)) best = t;
  }
  return best;
}

std::string to_string(PlannerKind kind) {
  return kind == PlannerKind::Sophisticated ? "sophisticated" : "naive";
}

namespace {

struct QhValues {
  const ProcrastinationSpec& spec;
  QuasiHyperbolicParams p;

  double write_now(int t) const {
    const int h = spec.horizon();
    if (t == h) return spec.final_reward - spec.cost(t);
    return -spec.cost(t) + p.beta * std::pow(p.delta, h - t) * spec.final_reward;
  }
  double wait_for(int t, int tau) const {
    const int h = spec.horizon();
    return p.beta * (std::pow(p.delta, tau - t) * -spec.cost(tau) +
                     std::pow(p.delta, h - t) * spec.final_reward);
  }
  // Never writing: the deadline penalty lands on day H.
  double never(int t) const {
    const int h = spec.horizon();
    const double pen = -spec.penalty_multiplier * spec.final_reward;
    return t == h ? pen : p.beta * std::pow(p.delta, h - t) * pen;
  }
};

}  // namespace

PlanningTrace qh_write_day(const ProcrastinationSpec& spec, const QuasiHyperbolicParams& params,
                           PlannerKind kind) {
  spec.validate_planning();
  params.validate();
  const int h = spec.horizon();
  const QhValues v{spec, params};
  PlanningTrace trace;

  if (kind == PlannerKind::Sophisticated) {
    std::vector<PlanningDay> days(static_cast<std::size_t>(h));
    int continuation = h;  // write day reached if the agent waits past the current day
    for (int t = h; t >= 1; --t) {
      PlanningDay d;
      d.day = t;
      d.write_value = v.write_now(t);
      if (t == h) {
        d.procrastinate_value = v.never(t);
        d.planned_day = h;
        d.writes = true;
      } else {
        d.procrastinate_value = v.wait_for(t, continuation);
        d.planned_day = continuation;
        d.writes = d.write_value > d.procrastinate_value;
      }
      if (d.writes) continuation = t;
      days[static_cast<std::size_t>(t - 1)] = d;
    }
    trace.days = std::move(days);
    trace.decision_day = continuation;
    return trace;
  }

  for (int t = 1; t <= h; ++t) {
    PlanningDay d;
    d.day = t;
    d.write_value = v.write_now(t);
    if (t == h) {
      d.procrastinate_value = v.never(t);
      d.planned_day = h;
      d.writes = true;
    } else {
      int best = t + 1;
      for (int tau = t + 2; tau <= h; ++tau) {
        if (v.wait_for(t, tau) > v.wait_for(t, best)) best = tau;
      }
      d.planned_day = best;
      d.procrastinate_value = v.wait_for(t, best);
      d.writes = d.write_value > d.procrastinate_value;
    }
    trace.days.push_back(d);
    if (d.writes) {
      trace.decision_day = t;
      break;
    }
  }
  return trace;
}

}  // namespace sublab
