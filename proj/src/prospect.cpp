#include "sublab/prospect.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sublab {

void ProspectParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 1");
  if (!(delta_gain > 0.0 && delta_gain <= 1.0)) throw std::invalid_argument("delta_gain must lie in (0, 1]");
  if (!(delta_loss > 0.0 && delta_loss <= 1.0)) throw std::invalid_argument("delta_loss must lie in (0, 1]");
}

void QuasiHyperbolicParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
}

Lottery::Lottery(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
  if (outcomes_.empty()) throw std::invalid_argument("lottery needs at least one outcome");
  double total = 0.0;
  for (const auto& o : outcomes_) {
    if (!(o.probability >= 0.0 && o.probability <= 1.0)) {
      throw std::invalid_argument("lottery probability outside [0, 1]: " + std::to_string(o.probability));
    }
    if (!std::isfinite(o.payoff)) throw std::invalid_argument("lottery payoff is not finite");
    total += o.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("lottery probabilities sum to " + std::to_string(total));
  }
}

double prospect_value(double x, const ProspectParams& params) {
  if (x > 0.0) return std::pow(x, params.alpha);
  if (x < 0.0) return -params.lambda * std::pow(-x, params.alpha);
  return 0.0;
}

double prospect_weight(double p, Domain domain, const ProspectParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability outside [0, 1]: " + std::to_string(p));
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double d = domain == Domain::Gain ? params.delta_gain : params.delta_loss;
  const double pd = std::pow(p, d);
  return pd / std::pow(pd + std::pow(1.0 - p, d), 1.0 / d);
}

double prospect_utility(const Lottery& lottery, Domain domain, const ProspectParams& params) {
  double u = 0.0;
  for (const auto& o : lottery.outcomes()) {
    if (o.payoff == 0.0) continue;
    u += prospect_weight(o.probability, domain, params) * prospect_value(o.payoff, params);
  }
  return u;
}

double expected_utility(const Lottery& lottery) {
  double u = 0.0;
  for (const auto& o : lottery.outcomes()) u += o.probability * o.payoff;
  return u;
}

}  // namespace sublab
