#include "sublab/imitation.hpp"

#include <cmath>
#include <numeric>

#include "sublab/format.hpp"

namespace sublab {

void DensityEstimatorSpec::validate() const {
  if (kernel == Kernel::Gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
    throw std::invalid_argument("Gaussian kernel bandwidth must be positive");
  }
  if (!(epsilon >= 0.0 && std::isfinite(epsilon))) {
    throw std::invalid_argument("density smoothing epsilon must be >= 0");
  }
}

UncoveredStateError::UncoveredStateError(StateIndex state)
    : std::invalid_argument("state " + std::to_string(state) + " has no demonstrations"), state_(state) {}

ActionDistribution estimate_action_density(const DemonstrationSet& demos, StateIndex state,
                                           const DensityEstimatorSpec& spec) {
  spec.validate();
  const std::size_t n_actions = demos.action_count();
  const auto actions = demos.actions_for(state);
  if (actions.empty()) throw UncoveredStateError(state);

  std::vector<double> mass(n_actions, 0.0);
  if (spec.kernel == Kernel::Delta) {
    for (ActionIndex a : actions) mass[a] += 1.0;
  } else {
    std::vector<double> bump(n_actions);
    for (ActionIndex center : actions) {
      double total = 0.0;
      for (std::size_t a = 0; a < n_actions; ++a) {
        const double d = static_cast<double>(a) - static_cast<double>(center);
        bump[a] = std::exp(-d * d / (2.0 * spec.bandwidth * spec.bandwidth));
        total += bump[a];
      }
      for (std::size_t a = 0; a < n_actions; ++a) mass[a] += bump[a] / total;
    }
  }
  double total = 0.0;
  for (double& m : mass) {
    m += spec.epsilon;
    total += m;
  }
  for (double& m : mass) m /= total;
  return ActionDistribution(std::move(mass));
}

std::map<StateIndex, ActionDistribution> estimate_all_densities(const DemonstrationSet& demos,
                                                                const DensityEstimatorSpec& spec) {
  std::map<StateIndex, ActionDistribution> out;
  for (StateIndex s : demos.covered_states()) out.emplace(s, estimate_action_density(demos, s, spec));
  return out;
}

void ImitationConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("imitation needs at least one epoch");
  if (batch_size == 0) throw std::invalid_argument("imitation batch size must be positive");
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) {
    throw std::invalid_argument("imitation learning rate must be positive");
  }
  density.validate();
}

namespace {

double full_loss(const MlpQNet& net, const std::vector<ImitationTarget>& targets) {
  return il_loss_and_grad(net, targets).loss;
}

}  // namespace

ImitationResult train_imitation(MlpQNet net, const DemonstrationSet& demos, const ImitationConfig& config) {
  config.validate();
  if (demos.empty()) throw std::invalid_argument("cannot imitate an empty demonstration set");
  if (net.state_count() != demos.state_count() || net.action_count() != demos.action_count()) {
    throw std::invalid_argument("network shape does not match the demonstration space");
  }

  std::vector<ImitationTarget> targets;
  for (auto& [state, dist] : estimate_all_densities(demos, config.density)) {
    targets.push_back({state, std::move(dist)});
  }

  ImitationResult result{std::move(net), {}};
  result.loss_curve.reserve(config.epochs + 1);
  result.loss_curve.push_back(full_loss(result.net, targets));

  Rng rng(config.seed);
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ImitationTarget> batch;
  batch.reserve(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t k = start; k < stop; ++k) batch.push_back(targets[order[k]]);
      const auto step = il_loss_and_grad(result.net, batch);
      if (!std::isfinite(step.loss) || !step.gradient.all_finite()) {
        throw TrainingDivergence("imitation diverged at epoch " + std::to_string(epoch));
      }
      apply_gradients(result.net, step.gradient, config.learning_rate);
      for (const auto& t : batch) {
        if (!q_forward(result.net, t.state).allFinite()) {
          throw TrainingDivergence("imitation diverged at epoch " + std::to_string(epoch));
        }
      }
    }
    const double loss = full_loss(result.net, targets);
    if (!std::isfinite(loss)) throw TrainingDivergence("imitation diverged at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(loss);
  }
  return result;
}

ImitationResult imitate(const DemonstrationSet& demos, const ImitationConfig& config, std::size_t hidden) {
  if (demos.empty()) throw std::invalid_argument("cannot imitate an empty demonstration set");
  auto net = MlpQNet::glorot(demos.state_count(), demos.action_count(), derive_seed(config.seed, 0x1a1a), hidden);
  return train_imitation(std::move(net), demos, config);
}

double max_density_error(const MlpQNet& net, const DemonstrationSet& demos, const DensityEstimatorSpec& spec) {
  double worst = 0.0;
  for (const auto& [state, h] : estimate_all_densities(demos, spec)) {
    const auto n = softmax(q_forward(net, state));
    for (std::size_t a = 0; a < h.size(); ++a) worst = std::max(worst, std::abs(n[a] - h[a]));
  }
  return worst;
}

std::vector<double> write_hazard(const ActionDistribution& days) {
  std::vector<double> hazard(days.size());
  double remaining = 0.0;
  for (std::size_t t = days.size(); t-- > 0;) {
    remaining += days[t];
    hazard[t] = remaining > 0.0 ? std::min(1.0, days[t] / remaining) : 1.0;
  }
  return hazard;
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out += std::to_string(i) + "," + format_double(curve[i]) + "\n";
  return out;
}

}  // namespace sublab
