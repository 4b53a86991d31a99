#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sublab/mdp.hpp"
#include "sublab/prospect.hpp"

namespace sublab {

enum class Game { Ultimatum, Marshmallow, Gamble, Procrastination };

std::string to_string(Game game);
Game game_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Ultimatum: the proposer offers x of T; the responder accepts or rejects.

namespace ultimatum {
inline constexpr ActionIndex kAccept = 0;
inline constexpr ActionIndex kReject = 1;
}  // namespace ultimatum

struct UltimatumSpec {
  int total = 10;

  void validate() const;
  std::size_t offer_count() const { return static_cast<std::size_t>(total) + 1; }
};

/// Responder MDP: state = offer x, one step, Accept pays x and Reject pays 0.
/// The initial offer is uniform over 0..T unless `offer` pins it.
MdpSpec build_env(const UltimatumSpec& spec, std::optional<int> offer = std::nullopt);

enum class ResponderChoice { Accept, Reject, Indifferent };

/// Accept for any positive offer; at x = 0 both actions pay nothing.
ResponderChoice ultimatum_nash_responder(int offer, const UltimatumSpec& spec = {});

// ---------------------------------------------------------------------------
// Marshmallow: one candy now or two after waiting one step.

namespace marshmallow {
inline constexpr ActionIndex kTakeNow = 0;
inline constexpr ActionIndex kWait = 1;
inline constexpr StateIndex kDecide = 0;
inline constexpr StateIndex kWaiting = 1;
}  // namespace marshmallow

enum class WaitVariant { TwoHours, FifteenMinutes };

std::string to_string(WaitVariant v);
WaitVariant wait_variant_from_string(const std::string& name);

struct MarshmallowSpec {
  double small_reward = 1.0;
  double large_reward = 2.0;
  WaitVariant wait_variant = WaitVariant::TwoHours;  // selects fixtures only

  void validate() const;
};

/// Decide --TakeNow--> end (+small); Decide --Wait--> Waiting (+0);
/// Waiting --any--> end (+large).
MdpSpec build_env(const MarshmallowSpec& spec);

// ---------------------------------------------------------------------------
// Double-or-nothing gamble over a grid of unfairness factors.

namespace gamble {
inline constexpr ActionIndex kAccept = 0;
inline constexpr ActionIndex kReject = 1;
}  // namespace gamble

enum class GambleRole { Winner, Loser };

std::string to_string(GambleRole role);

struct GambleState {
  GambleRole role = GambleRole::Winner;
  double epsilon = 0.0;

  bool operator==(const GambleState&) const = default;
};

struct GambleSpec {
  double stake = 5.0;
  std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4};

  void validate() const;
  std::size_t state_count() const { return 2 * epsilons.size(); }
  /// Winner states first, then loser states, each in epsilon-grid order.
  StateIndex state_index(const GambleState& state) const;
  GambleState state_at(StateIndex index) const;
};

/// Payoffs of accepting the second bet, measured from zero (the winner ends
/// at 2*stake or 0, the loser at 0 or -2*stake).
Lottery accept_lottery(const GambleSpec& spec, const GambleState& state);
double reject_payoff(const GambleSpec& spec, const GambleState& state);
Domain framing(const GambleState& state);

/// One-step MDP with stochastic payoffs. Uniform initial state unless pinned.
MdpSpec build_env(const GambleSpec& spec, std::optional<GambleState> state = std::nullopt);

/// Same states and actions, but every choice pays its deterministic prospect
/// utility instead of a sampled payoff: the reward a prospect-biased learner sees.
MdpSpec build_prospect_env(const GambleSpec& spec, const ProspectParams& params);

/// Expected-value maximizer; ties go to Accept.
ActionIndex rational_gamble_decision(const GambleSpec& spec, const GambleState& state);

/// Prospect-utility maximizer in the role's framing domain; ties go to Accept.
ActionIndex prospect_gamble_decision(const GambleSpec& spec, const GambleState& state,
                                     const ProspectParams& params = {});

// ---------------------------------------------------------------------------
// Procrastination: pick one day in 1..H to write a report.

namespace procrastination {
inline constexpr ActionIndex kProcrastinate = 0;
inline constexpr ActionIndex kWrite = 1;
}  // namespace procrastination

struct ProcrastinationSpec {
  std::vector<double> costs;  // c_1..c_H, strictly increasing and positive
  double final_reward = 0.0;  // R
  double penalty_multiplier = 2.0;  // K > 1

  /// c = (1, 2, 4, 7), R = 14.
  static ProcrastinationSpec four_day();
  /// c_1 = 1, c_t = t + c_{t-1}, R = 2 c_H. Throws for horizon < 1.
  static ProcrastinationSpec from_recurrence(int horizon);
  static ProcrastinationSpec ten_day() { return from_recurrence(10); }

  int horizon() const { return static_cast<int>(costs.size()); }
  double cost(int day) const { return costs.at(static_cast<std::size_t>(day - 1)); }

  /// Throws std::invalid_argument on non-increasing costs or K <= 1.
  void validate() const;
  /// Like validate() but only requires positive costs; planners accept
  /// degenerate (flat) schedules for tie-break checks.
  void validate_planning() const;

  std::size_t state_count() const { return 2 * costs.size(); }
  /// State [t, f] for day t in 1..H and written flag f.
  static StateIndex state_index(int day, bool written) {
    return static_cast<StateIndex>(2 * (day - 1) + (written ? 1 : 0));
  }
};

/// r(s_t, a_t, s_{t+1}) with f_{t+1} = f_t or a_t.
double procrastination_reward(const ProcrastinationSpec& spec, int day, bool written,
                              ActionIndex action);

/// H-step MDP starting at [1, 0]; the step out of day H terminates.
MdpSpec build_env(const ProcrastinationSpec& spec);

/// argmax_t (R - c_t), lowest day on ties.
int rational_write_day(const ProcrastinationSpec& spec);

enum class PlannerKind { Sophisticated, Naive };

std::string to_string(PlannerKind kind);

struct PlanningDay {
  int day = 0;
  double write_value = 0.0;
  double procrastinate_value = 0.0;
  int planned_day = 0;  // tau: the write day the agent expects if it waits
  bool writes = false;
};

struct PlanningTrace {
  std::vector<PlanningDay> days;
  int decision_day = 0;
};

/// Quasi-hyperbolic planner. Values are taken from the deciding day's
/// perspective: writing on day t is worth -c_t + beta delta^(H-t) R, and
/// waiting for day tau is worth beta (delta^(tau-t) (-c_tau) + delta^(H-t) R).
/// Sophisticated agents get tau from backward induction over their own
/// future choices; naive agents assume they will write on the best future
/// day. Day H always writes.
PlanningTrace qh_write_day(const ProcrastinationSpec& spec, const QuasiHyperbolicParams& params,
                           PlannerKind kind);

}  // namespace sublab
