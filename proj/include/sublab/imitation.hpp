#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublab/demonstrations.hpp"
#include "sublab/qnet.hpp"

namespace sublab {

enum class Kernel { Delta, Gaussian };

struct DensityEstimatorSpec {
  Kernel kernel = Kernel::Delta;
  double bandwidth = 1.0;  // Gaussian only, in action-index units
  double epsilon = 0.0;    // additive smoothing per action before renormalizing

  void validate() const;
};

class UncoveredStateError : public std::invalid_argument {
 public:
  explicit UncoveredStateError(StateIndex state);
  StateIndex state() const { return state_; }

 private:
  StateIndex state_;
};

/// h(s) from the demonstrations recorded at `state`. Delta: action
/// frequencies. Gaussian: each demonstration adds a bump exp(-(a-a_i)^2 /
/// 2 bw^2) over the ordinal actions, normalized per demonstration.
ActionDistribution estimate_action_density(const DemonstrationSet& demos, StateIndex state,
                                           const DensityEstimatorSpec& spec = {});

/// h(s) for every covered state.
std::map<StateIndex, ActionDistribution> estimate_all_densities(const DemonstrationSet& demos,
                                                                const DensityEstimatorSpec& spec = {});

struct ImitationConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 4;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  DensityEstimatorSpec density;

  void validate() const;
};

struct ImitationResult {
  MlpQNet net;
  /// Mean loss over all covered states before training, then after each epoch.
  std::vector<double> loss_curve;
};

/// Mini-batch SGD on ||softmax(Q(s)) - h(s)||^2. Each epoch visits the
/// covered states once in a seeded shuffled order. Throws
/// std::invalid_argument for an empty set or a net of the wrong shape, and
/// TrainingDivergence on a non-finite loss.
ImitationResult train_imitation(MlpQNet net, const DemonstrationSet& demos,
                                const ImitationConfig& config = {});

/// Fresh Glorot net for the set's space, trained by train_imitation.
ImitationResult imitate(const DemonstrationSet& demos, const ImitationConfig& config = {},
                        std::size_t hidden = MlpQNet::kDefaultHidden);

/// Worst |n(s) - h(s)| over covered states and actions.
double max_density_error(const MlpQNet& net, const DemonstrationSet& demos,
                         const DensityEstimatorSpec& spec = {});

/// Turns a distribution over write days 1..H into per-day write
/// probabilities for the unwritten state: P(write on t | not yet) =
/// p_t / sum_{d >= t} p_d (1 when the remaining mass is zero).
std::vector<double> write_hazard(const ActionDistribution& days);

/// "epoch,loss" CSV.
std::string loss_curve_csv(const std::vector<double>& curve);

}  // namespace sublab
