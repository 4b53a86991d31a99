#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sublab/rng.hpp"

namespace sublab {

/// Linear epsilon decay from `start` to `end` over `decay_steps` steps, then flat.
struct ExplorationSchedule {
  double start = 1.0;
  double end = 0.05;
  std::size_t decay_steps = 1;

  double epsilon(std::size_t step) const;
  void validate() const;
};

/// Stateless epsilon-greedy learner with sample-average arm values.
class BanditPolicy {
 public:
  BanditPolicy(std::size_t arm_count, ExplorationSchedule schedule);

  std::size_t arm_count() const { return estimates_.size(); }
  const std::vector<double>& estimates() const { return estimates_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t total_pulls() const { return total_; }
  const ExplorationSchedule& schedule() const { return schedule_; }

  /// Q_arm <- Q_arm + (reward - Q_arm) / count. Throws std::out_of_range.
  void update(std::size_t arm, double reward);

  /// Epsilon-greedy draw; epsilon is taken from the schedule at total_pulls().
  std::size_t select(Rng& rng) const;

  /// Highest estimate, ties to the lowest arm index.
  std::size_t greedy_arm() const;

 private:
  std::vector<double> estimates_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
  ExplorationSchedule schedule_;
};

void bandit_update(BanditPolicy& policy, std::size_t arm, double reward);
std::size_t bandit_select(const BanditPolicy& policy, Rng& rng);

}  // namespace sublab
