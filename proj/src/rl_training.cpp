#include "sublab/rl_training.hpp"

#include <cmath>
#include <stdexcept>

#include "sublab/format.hpp"

namespace sublab {

namespace {

std::size_t decay_steps(std::size_t episodes, double fraction) {
  const auto steps = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(episodes)));
  return steps == 0 ? 1 : steps;
}

void check_fraction(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("decay fraction must lie in [0, 1]");
}

ActionIndex epsilon_greedy(const MlpQNet& net, StateIndex state, double epsilon, Rng& rng) {
  const double coin = rng.uniform();
  const ActionIndex random_action = rng.index(net.action_count());
  return coin < epsilon ? random_action : greedy_action(net, state);
}

void sgd_step(MlpQNet& net, const TdSample& sample, double lr, const char* who) {
  const auto step = td_loss_and_grad(net, std::span<const TdSample>(&sample, 1));
  if (!std::isfinite(step.loss) || !step.gradient.all_finite()) {
    throw TrainingDivergence(std::string(who) + " TD update produced a non-finite value");
  }
  apply_gradients(net, step.gradient, lr);
}

}  // namespace

void QLearningHyper::validate() const {
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) {
    throw std::invalid_argument("Q-learning rate must be positive");
  }
  if (episodes == 0) throw std::invalid_argument("Q-learning needs at least one episode");
  if (hidden == 0) throw std::invalid_argument("hidden width must be positive");
  check_fraction(decay_fraction);
  schedule().validate();
  if (!discount.is_exponential()) {
    throw std::invalid_argument(
        "Q-learning needs an exponential discount: quasi-hyperbolic preferences are time-inconsistent, "
        "so no single Bellman fixed point exists; use the quasi-hyperbolic planners instead");
  }
}

ExplorationSchedule QLearningHyper::schedule() const {
  return {epsilon_start, epsilon_end, decay_steps(episodes, decay_fraction)};
}

QLearningResult train_q_learning(const MdpSpec& spec, const QLearningHyper& hyper) {
  hyper.validate();
  spec.validate();
  const double gamma = std::get<Exponential>(hyper.discount.variant()).gamma;
  const ExplorationSchedule schedule = hyper.schedule();

  QLearningResult result{
      MlpQNet::glorot(spec.state_count, spec.action_count, derive_seed(hyper.seed, 0x9e7), hyper.hidden), {}};
  result.reward_curve.reserve(hyper.episodes);

  for (std::size_t episode = 0; episode < hyper.episodes; ++episode) {
    Rng rng(derive_seed(hyper.seed, episode));
    const double epsilon = schedule.epsilon(episode);
    StateIndex state = spec.initial_state(rng);
    double total = 0.0;
    for (std::size_t t = 0; t < spec.horizon; ++t) {
      const ActionIndex action = epsilon_greedy(result.net, state, epsilon, rng);
      const StepOutcome out = spec.step(state, action, rng);
      total += out.reward;
      const bool last = !out.next || t + 1 == spec.horizon;
      double target = out.reward;
      if (!last) target += gamma * q_forward(result.net, *out.next).maxCoeff();
      sgd_step(result.net, {state, action, target}, hyper.learning_rate, "Q-learning");
      if (last) break;
      state = *out.next;
    }
    result.reward_curve.push_back(total);
  }
  return result;
}

void UltimatumJointConfig::validate() const {
  if (episodes == 0) throw std::invalid_argument("joint training needs at least one episode");
  if (!(responder_learning_rate > 0.0 && std::isfinite(responder_learning_rate))) {
    throw std::invalid_argument("responder learning rate must be positive");
  }
  if (hidden == 0) throw std::invalid_argument("hidden width must be positive");
  check_fraction(decay_fraction);
  ExplorationSchedule{epsilon_start, epsilon_end, 1}.validate();
}

UltimatumJointResult train_ultimatum_joint(const UltimatumSpec& spec, ResponderMode responder,
                                           const UltimatumJointConfig& config, std::uint64_t seed) {
  spec.validate();
  config.validate();
  const ExplorationSchedule schedule{config.epsilon_start, config.epsilon_end,
                                     decay_steps(config.episodes, config.decay_fraction)};
  const bool learned = std::holds_alternative<LearnedResponder>(responder);

  MlpQNet net = learned ? MlpQNet::glorot(spec.offer_count(), 2, derive_seed(seed, 0x7e5), config.hidden)
                        : std::get<FixedResponder>(responder).net;
  if (net.state_count() != spec.offer_count() || net.action_count() != 2) {
    throw std::invalid_argument("responder net must map the " + std::to_string(spec.offer_count()) +
                                " offers to 2 actions");
  }

  UltimatumJointResult result{BanditPolicy(spec.offer_count(), schedule), std::move(net), {}, {}, spec.total};
  result.proposer_rewards.reserve(config.episodes);
  result.responder_rewards.reserve(config.episodes);

  Rng rng(derive_seed(seed, 0xb0a));
  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    const auto offer = static_cast<int>(result.proposer.select(rng));
    const auto state = static_cast<StateIndex>(offer);
    ActionIndex action;
    if (learned) {
      action = epsilon_greedy(result.responder, state, schedule.epsilon(episode), rng);
    } else {
      action = select_action(softmax(q_forward(result.responder, state)), SelectMode::Sample, rng);
    }
    const bool accepted = action == ultimatum::kAccept;
    const double proposer_reward = accepted ? spec.total - offer : 0.0;
    const double responder_reward = accepted ? offer : 0.0;
    result.proposer.update(static_cast<std::size_t>(offer), proposer_reward);
    if (learned) {
      sgd_step(result.responder, {state, action, responder_reward}, config.responder_learning_rate, "responder");
    }
    result.proposer_rewards.push_back(proposer_reward);
    result.responder_rewards.push_back(responder_reward);
  }
  return result;
}

std::string joint_rewards_csv(const UltimatumJointResult& result) {
  std::string out = "episode,proposer_reward,responder_reward\n";
  for (std::size_t i = 0; i < result.proposer_rewards.size(); ++i) {
    out += std::to_string(i) + "," + format_double(result.proposer_rewards[i]) + "," +
           format_double(result.responder_rewards[i]) + "\n";
  }
  return out;
}

std::string reward_curve_csv(const std::vector<double>& curve) {
  std::string out = "episode,reward\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out += std::to_string(i) + "," + format_double(curve[i]) + "\n";
  return out;
}

}  // namespace sublab
