#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublab/mdp.hpp"
#include "sublab/rng.hpp"

namespace sublab {

/// Probability vector over a discrete action set: entries >= 0, sum 1 within 1e-9.
class ActionDistribution {
 public:
  /// Throws std::invalid_argument if the invariants do not hold.
  explicit ActionDistribution(std::vector<double> probs);

  static ActionDistribution uniform(std::size_t n);
  static ActionDistribution point_mass(std::size_t n, std::size_t action);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const ActionDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Weights of the three fully connected layers: one-hot states -> hidden ->
/// hidden -> Q-values. Gradients use the same type.
struct NetParameters {
  std::array<DenseLayer, 3> layers;

  bool same_shape(const NetParameters& other) const;
  NetParameters zeros_like() const;
  std::size_t size() const;
  bool all_finite() const;

  /// Flat views in layer order (weight row-major, then bias); used by the
  /// finite-difference checks and serialization.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);
};

/// Q-value network over one-hot encoded states. Hidden layers use ReLU; the
/// output layer is linear.
class MlpQNet {
 public:
  static constexpr std::size_t kDefaultHidden = 64;

  /// All parameters zero.
  MlpQNet(std::size_t state_count, std::size_t action_count,
          std::size_t hidden = kDefaultHidden);

  /// Glorot-uniform weights, zero biases.
  static MlpQNet glorot(std::size_t state_count, std::size_t action_count,
                        std::uint64_t seed, std::size_t hidden = kDefaultHidden);

  std::size_t state_count() const { return state_count_; }
  std::size_t action_count() const { return action_count_; }
  std::size_t hidden_width() const { return hidden_; }

  NetParameters& parameters() { return params_; }
  const NetParameters& parameters() const { return params_; }

  /// Throws std::out_of_range for a state outside [0, state_count).
  Eigen::VectorXd q_values(StateIndex state) const;

  /// Serialized as the "mlp_qnet" JSON document, version 1.
  std::string to_json() const;
  static MlpQNet from_json(const std::string& text);

  bool operator==(const MlpQNet& other) const;

 private:
  std::size_t state_count_;
  std::size_t action_count_;
  std::size_t hidden_;
  NetParameters params_;
};

Eigen::VectorXd q_forward(const MlpQNet& net, StateIndex state);

/// Shift-stable softmax.
ActionDistribution softmax(const Eigen::VectorXd& q);

struct ImitationTarget {
  StateIndex state = 0;
  ActionDistribution target;
};

struct LossAndGradient {
  double loss = 0.0;
  NetParameters gradient;
};

/// Mean over the batch of ||softmax(Q(s)) - h(s)||^2 and its exact gradient.
LossAndGradient il_loss_and_grad(const MlpQNet& net, std::span<const ImitationTarget> batch);

struct TdSample {
  StateIndex state = 0;
  ActionIndex action = 0;
  double target = 0.0;
};

/// Mean over the batch of (Q(s, a) - y)^2 and its gradient.
LossAndGradient td_loss_and_grad(const MlpQNet& net, std::span<const TdSample> batch);

/// Plain SGD step: theta <- theta - lr * grad. Throws std::invalid_argument
/// on a shape mismatch or a negative learning rate.
void apply_gradients(MlpQNet& net, const NetParameters& gradient, double learning_rate);

enum class SelectMode { Greedy, Sample };

/// Greedy: argmax, ties to the lowest index. Sample: inverse-CDF draw.
ActionIndex select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng);
ActionIndex select_action(const ActionDistribution& dist, SelectMode mode, std::uint64_t seed);

/// Argmax of the Q-values with lowest-index tie-break.
ActionIndex greedy_action(const MlpQNet& net, StateIndex state);

/// Policy that queries the network: greedy over Q, or a draw from softmax(Q).
Policy net_policy(const MlpQNet& net, SelectMode mode);

/// A training loop produced a non-finite loss or parameter.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sublab
