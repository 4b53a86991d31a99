#pragma once

// Seeded random generators for property tests.

#include <cmath>
#include <cstddef>
#include <vector>

#include "sublab/mdp.hpp"
#include "sublab/qnet.hpp"
#include "sublab/rng.hpp"

namespace gen {

inline double real(sublab::Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline std::size_t size(sublab::Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

inline std::vector<double> reals(sublab::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> out(n);
  for (auto& x : out) x = real(rng, lo, hi);
  return out;
}

inline Eigen::VectorXd vector(sublab::Rng& rng, std::size_t n, double lo, double hi) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = real(rng, lo, hi);
  return v;
}

inline sublab::ActionDistribution distribution(sublab::Rng& rng, std::size_t n) {
  std::vector<double> w = reals(rng, n, 0.0, 1.0);
  // Occasionally a point mass, which is the common shape of fixture densities.
  if (rng.uniform() < 0.25) {
    return sublab::ActionDistribution::point_mass(n, rng.index(n));
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return sublab::ActionDistribution(std::move(w));
}

/// Glorot net with random shape and all biases perturbed so that no ReLU sits
/// exactly at its kink.
inline sublab::MlpQNet net(sublab::Rng& rng, std::size_t max_states = 8, std::size_t max_actions = 5,
                           std::size_t max_hidden = 12) {
  const std::size_t s = size(rng, 1, max_states);
  const std::size_t a = size(rng, 2, max_actions);
  const std::size_t h = size(rng, 2, max_hidden);
  auto n = sublab::MlpQNet::glorot(s, a, rng.next_u64(), h);
  for (auto& layer : n.parameters().layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = real(rng, -0.3, 0.3);
  }
  return n;
}

inline std::vector<sublab::ImitationTarget> il_batch(sublab::Rng& rng, const sublab::MlpQNet& net,
                                                     std::size_t max_len = 6) {
  std::vector<sublab::ImitationTarget> batch;
  const std::size_t len = size(rng, 1, max_len);
  for (std::size_t i = 0; i < len; ++i) {
    batch.push_back({rng.index(net.state_count()), distribution(rng, net.action_count())});
  }
  return batch;
}

inline std::vector<sublab::TdSample> td_batch(sublab::Rng& rng, const sublab::MlpQNet& net, std::size_t max_len = 6) {
  std::vector<sublab::TdSample> batch;
  const std::size_t len = size(rng, 1, max_len);
  for (std::size_t i = 0; i < len; ++i) {
    batch.push_back({rng.index(net.state_count()), rng.index(net.action_count()), real(rng, -5.0, 5.0)});
  }
  return batch;
}

inline sublab::Trajectory trajectory(sublab::Rng& rng, std::size_t max_len = 12) {
  sublab::Trajectory t;
  const std::size_t len = size(rng, 1, max_len);
  for (std::size_t i = 0; i < len; ++i) {
    t.steps.push_back({rng.index(4), rng.index(2), std::round(real(rng, -20.0, 20.0) * 4.0) / 4.0});
  }
  t.terminal = rng.uniform() < 0.5;
  return t;
}

}  // namespace gen
