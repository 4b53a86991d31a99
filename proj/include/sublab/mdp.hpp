#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "sublab/rng.hpp"

namespace sublab {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// Result of taking one action. `next` is empty when the episode ends;
/// terminal is absorbing and yields no further reward.
struct StepOutcome {
  std::optional<StateIndex> next;
  double reward = 0.0;
};

/// Finite episodic MDP. The transition and the reward it produces are
/// sampled together so stochastic payoffs (the gamble) need no auxiliary
/// outcome states.
struct MdpSpec {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
  std::size_t horizon = 0;
  std::function<StateIndex(Rng&)> initial_state;
  std::function<StepOutcome(StateIndex, ActionIndex, Rng&)> step;

  /// Throws std::invalid_argument if counts or callables are missing.
  void validate() const;
};

struct Exponential {
  double gamma = 1.0;
};

struct QuasiHyperbolic {
  double beta = 1.0;
  double delta = 1.0;
};

/// Exponential{gamma} or QuasiHyperbolic{beta, delta}; every factor in [0, 1].
class DiscountSpec {
 public:
  using Variant = std::variant<Exponential, QuasiHyperbolic>;

  DiscountSpec(Exponential e);       // NOLINT(google-explicit-constructor)
  DiscountSpec(QuasiHyperbolic q);   // NOLINT(google-explicit-constructor)

  static DiscountSpec exponential(double gamma) { return Exponential{gamma}; }
  static DiscountSpec quasi_hyperbolic(double beta, double delta) {
    return QuasiHyperbolic{beta, delta};
  }

  const Variant& variant() const { return v_; }
  bool is_exponential() const { return std::holds_alternative<Exponential>(v_); }

  /// Weight applied to the reward k steps after the first one.
  double weight(std::size_t k) const;

 private:
  Variant v_;
};

struct TrajectoryStep {
  StateIndex state = 0;
  ActionIndex action = 0;
  double reward = 0.0;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  bool terminal = false;  // false when cut off by the horizon

  double raw_return() const;
  bool operator==(const Trajectory&) const = default;
};

using Policy = std::function<ActionIndex(StateIndex, Rng&)>;

/// Runs one episode. All randomness comes from a generator seeded with `seed`.
/// Throws std::out_of_range if the policy names an action outside the spec.
Trajectory rollout(const Policy& policy, const MdpSpec& spec, std::uint64_t seed);

/// Exponential: sum gamma^t r_t. Quasi-hyperbolic, valued from the first step:
/// r_0 + beta * sum_{k>=1} delta^k r_k. Throws on an empty trajectory.
double discounted_return(const Trajectory& trajectory, const DiscountSpec& discount);

struct ReturnStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample mean and (n-1) standard deviation of the discounted return over
/// `episodes` rollouts; episode k uses derive_seed(seed, k).
ReturnStats evaluate_policy(const Policy& policy, const MdpSpec& spec,
                            const DiscountSpec& discount, std::size_t episodes,
                            std::uint64_t seed);

}  // namespace sublab
