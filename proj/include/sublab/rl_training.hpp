#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sublab/bandit.hpp"
#include "sublab/games.hpp"
#include "sublab/mdp.hpp"
#include "sublab/qnet.hpp"

namespace sublab {

struct QLearningHyper {
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double decay_fraction = 0.5;  // share of episodes over which epsilon decays linearly
  std::size_t episodes = 2000;
  DiscountSpec discount = Exponential{1.0};
  std::uint64_t seed = 0;
  std::size_t hidden = MlpQNet::kDefaultHidden;

  /// Throws std::invalid_argument, including for a quasi-hyperbolic discount.
  void validate() const;
  ExplorationSchedule schedule() const;
};

struct QLearningResult {
  MlpQNet net;
  std::vector<double> reward_curve;  // undiscounted return per episode
};

/// Online epsilon-greedy TD(0) on a Glorot-initialized Q-net: one SGD step
/// per transition toward r + gamma max_a' Q(s', a'), or r at the terminal.
QLearningResult train_q_learning(const MdpSpec& spec, const QLearningHyper& hyper);

/// Responder that is an already trained net, queried in Sample mode.
struct FixedResponder {
  MlpQNet net;
};

/// Responder co-learned by epsilon-greedy TD alongside the proposer.
struct LearnedResponder {};

using ResponderMode = std::variant<FixedResponder, LearnedResponder>;

struct UltimatumJointConfig {
  std::size_t episodes = 20000;
  double decay_fraction = 0.5;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double responder_learning_rate = 1e-3;
  std::size_t hidden = MlpQNet::kDefaultHidden;

  void validate() const;
};

struct UltimatumJointResult {
  BanditPolicy proposer;
  MlpQNet responder;
  std::vector<double> proposer_rewards;
  std::vector<double> responder_rewards;
  int total = 10;

  int final_offer() const { return static_cast<int>(proposer.greedy_arm()); }
  int final_keep() const { return total - final_offer(); }
};

/// Proposer bandit over offers 0..T against the responder. Each episode the
/// proposer offers x, the responder accepts or rejects, the proposer's arm
/// is credited (T - x) if accepted and the responder earns x if accepted.
UltimatumJointResult train_ultimatum_joint(const UltimatumSpec& spec, ResponderMode responder,
                                           const UltimatumJointConfig& config, std::uint64_t seed);

/// "episode,proposer_reward,responder_reward" CSV.
std::string joint_rewards_csv(const UltimatumJointResult& result);
/// "episode,reward" CSV.
std::string reward_curve_csv(const std::vector<double>& curve);

}  // namespace sublab
