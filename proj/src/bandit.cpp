#include "sublab/bandit.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sublab {

double ExplorationSchedule::epsilon(std::size_t step) const {
  if (step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void ExplorationSchedule::validate() const {
  if (!(start >= 0.0 && start <= 1.0 && end >= 0.0 && end <= 1.0)) {
    throw std::invalid_argument("exploration rates must lie in [0, 1]");
  }
  if (decay_steps == 0) throw std::invalid_argument("exploration decay needs at least one step");
}

BanditPolicy::BanditPolicy(std::size_t arm_count, ExplorationSchedule schedule)
    : estimates_(arm_count, 0.0), counts_(arm_count, 0), schedule_(schedule) {
  if (arm_count == 0) throw std::invalid_argument("bandit needs at least one arm");
  schedule_.validate();
}

void BanditPolicy::update(std::size_t arm, double reward) {
  if (arm >= estimates_.size()) {
    throw std::out_of_range("bandit arm " + std::to_string(arm) + " out of range");
  }
  ++counts_[arm];
  ++total_;
  estimates_[arm] += (reward - estimates_[arm]) / static_cast<double>(counts_[arm]);
}

std::size_t BanditPolicy::select(Rng& rng) const {
  // Draw the exploration coin first so the random stream does not depend on
  // the outcome of the greedy comparison.
  const double coin = rng.uniform();
  const std::size_t random_arm = rng.index(estimates_.size());
  if (coin < schedule_.epsilon(total_)) return random_arm;
  return greedy_arm();
}

std::size_t BanditPolicy::greedy_arm() const {
  return static_cast<std::size_t>(
      std::distance(estimates_.begin(), std::max_element(estimates_.begin(), estimates_.end())));
}

void bandit_update(BanditPolicy& policy, std::size_t arm, double reward) { policy.update(arm, reward); }

std::size_t bandit_select(const BanditPolicy& policy, Rng& rng) { return policy.select(rng); }

}  // namespace sublab
