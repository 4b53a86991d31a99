#pragma once

#include <vector>

namespace sublab {

/// Tversky-Kahneman calibration. Defaults are the values estimated from
/// human choice data.
struct ProspectParams {
  double alpha = 0.88;       // value curvature, (0, 1]
  double lambda = 2.25;      // loss aversion, >= 1
  double delta_gain = 0.61;  // probability weighting exponent for gains, (0, 1]
  double delta_loss = 0.69;  // ... and for losses

  /// Throws std::invalid_argument when a field is outside its range.
  void validate() const;

  /// alpha = lambda = delta = 1: prospect utility collapses to expected value.
  static ProspectParams identity() { return {1.0, 1.0, 1.0, 1.0}; }
};

struct QuasiHyperbolicParams {
  double beta = 1.0;   // present bias, [0, 1]
  double delta = 1.0;  // long-run discount, [0, 1]

  void validate() const;
};

enum class Domain { Gain, Loss };

struct Outcome {
  double probability = 0.0;
  double payoff = 0.0;
};

/// Non-empty list of outcomes whose probabilities sum to 1 (within 1e-9).
class Lottery {
 public:
  explicit Lottery(std::vector<Outcome> outcomes);

  static Lottery certain(double payoff) { return Lottery({{1.0, payoff}}); }

  const std::vector<Outcome>& outcomes() const { return outcomes_; }

 private:
  std::vector<Outcome> outcomes_;
};

/// x^alpha for x >= 0, -lambda (-x)^alpha otherwise.
double prospect_value(double x, const ProspectParams& params = {});

/// p^d / (p^d + (1-p)^d)^(1/d) with d chosen by domain. Throws
/// std::invalid_argument for p outside [0, 1].
double prospect_weight(double p, Domain domain, const ProspectParams& params = {});

/// Sum of w(p_i) v(x_i). Outcomes with zero payoff contribute nothing.
double prospect_utility(const Lottery& lottery, Domain domain, const ProspectParams& params = {});

double expected_utility(const Lottery& lottery);

}  // namespace sublab
