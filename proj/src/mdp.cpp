#include "sublab/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sublab {

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string("discount parameter ") + name +
                                " must lie in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace

void MdpSpec::validate() const {
  if (state_count == 0 || action_count == 0 || horizon == 0) {
    throw std::invalid_argument("MdpSpec needs positive state, action and horizon counts");
  }
  if (!initial_state || !step) {
    throw std::invalid_argument("MdpSpec is missing its initial-state or step function");
  }
}

DiscountSpec::DiscountSpec(Exponential e) : v_(e) { check_unit(e.gamma, "gamma"); }

DiscountSpec::DiscountSpec(QuasiHyperbolic q) : v_(q) {
  check_unit(q.beta, "beta");
  check_unit(q.delta, "delta");
}

double DiscountSpec::weight(std::size_t k) const {
  if (const auto* e = std::get_if<Exponential>(&v_)) {
    return std::pow(e->gamma, static_cast<double>(k));
  }
  const auto& q = std::get<QuasiHyperbolic>(v_);
  if (k == 0) return 1.0;
  return q.beta * std::pow(q.delta, static_cast<double>(k));
}

double Trajectory::raw_return() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward;
  return sum;
}

Trajectory rollout(const Policy& policy, const MdpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Trajectory traj;
  StateIndex state = spec.initial_state(rng);
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    if (state >= spec.state_count) {
      throw std::out_of_range("environment produced state " + std::to_string(state) +
                              " outside [0, " + std::to_string(spec.state_count) + ")");
    }
    const ActionIndex action = policy(state, rng);
    if (action >= spec.action_count) {
      throw std::out_of_range("policy chose action " + std::to_string(action) +
                              " in state " + std::to_string(state) + " but only " +
                              std::to_string(spec.action_count) + " actions exist");
    }
    const StepOutcome out = spec.step(state, action, rng);
    traj.steps.push_back({state, action, out.reward});
    if (!out.next) {
      traj.terminal = true;
      break;
    }
    state = *out.next;
  }
  return traj;
}

double discounted_return(const Trajectory& trajectory, const DiscountSpec& discount) {
  if (trajectory.steps.empty()) {
    throw std::invalid_argument("discounted_return of an empty trajectory");
  }
  // Both variants share the same summation order: first reward plus a
  // geometric tail. With beta = 1 the quasi-hyperbolic value is therefore
  // bit-identical to the exponential one.
  double ratio = 0.0;
  double beta = 1.0;
  if (const auto* q = std::get_if<QuasiHyperbolic>(&discount.variant())) {
    ratio = q->delta;
    beta = q->beta;
  } else {
    ratio = std::get<Exponential>(discount.variant()).gamma;
  }
  double tail = 0.0;
  double w = 1.0;
  for (std::size_t k = 1; k < trajectory.steps.size(); ++k) {
    w *= ratio;
    tail += w * trajectory.steps[k].reward;
  }
  return trajectory.steps[0].reward + beta * tail;
}

ReturnStats evaluate_policy(const Policy& policy, const MdpSpec& spec,
                            const DiscountSpec& discount, std::size_t episodes,
                            std::uint64_t seed) {
  if (episodes == 0) {
    throw std::invalid_argument("evaluate_policy needs at least one episode");
  }
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t k = 0; k < episodes; ++k) {
    returns.push_back(discounted_return(rollout(policy, spec, derive_seed(seed, k)), discount));
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(episodes);
  double ss = 0.0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  const double var = episodes > 1 ? ss / static_cast<double>(episodes - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace sublab
