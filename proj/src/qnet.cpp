#include "sublab/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace sublab {

// ---------------------------------------------------------------------------
// ActionDistribution

ActionDistribution::ActionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("action distribution over zero actions");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("action probability must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("action probabilities sum to " + std::to_string(total));
  }
}

ActionDistribution ActionDistribution::uniform(std::size_t n) {
  return ActionDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ActionDistribution ActionDistribution::point_mass(std::size_t n, std::size_t action) {
  std::vector<double> p(n, 0.0);
  p.at(action) = 1.0;
  return ActionDistribution(std::move(p));
}

// ---------------------------------------------------------------------------
// NetParameters

bool NetParameters::same_shape(const NetParameters& other) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      return false;
    }
  }
  return true;
}

NetParameters NetParameters::zeros_like() const {
  NetParameters z;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    z.layers[i].weight = Eigen::MatrixXd::Zero(layers[i].weight.rows(), layers[i].weight.cols());
    z.layers[i].bias = Eigen::VectorXd::Zero(layers[i].bias.size());
  }
  return z;
}

std::size_t NetParameters::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool NetParameters::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

std::vector<double> NetParameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

void NetParameters::assign_flat(std::span<const double> flat) {
  if (flat.size() != size()) {
    throw std::invalid_argument("flat parameter vector has " + std::to_string(flat.size()) +
                                " entries, expected " + std::to_string(size()));
  }
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

// ---------------------------------------------------------------------------
// MlpQNet

MlpQNet::MlpQNet(std::size_t state_count, std::size_t action_count, std::size_t hidden)
    : state_count_(state_count), action_count_(action_count), hidden_(hidden) {
  if (state_count == 0 || action_count == 0 || hidden == 0) {
    throw std::invalid_argument("MlpQNet dimensions must be positive");
  }
  const auto s = static_cast<Eigen::Index>(state_count);
  const auto a = static_cast<Eigen::Index>(action_count);
  const auto h = static_cast<Eigen::Index>(hidden);
  params_.layers[0] = {Eigen::MatrixXd::Zero(h, s), Eigen::VectorXd::Zero(h)};
  params_.layers[1] = {Eigen::MatrixXd::Zero(h, h), Eigen::VectorXd::Zero(h)};
  params_.layers[2] = {Eigen::MatrixXd::Zero(a, h), Eigen::VectorXd::Zero(a)};
}

MlpQNet MlpQNet::glorot(std::size_t state_count, std::size_t action_count, std::uint64_t seed,
                        std::size_t hidden) {
  MlpQNet net(state_count, action_count, hidden);
  Rng rng(seed);
  for (auto& layer : net.params_.layers) {
    const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
    const double limit = std::sqrt(6.0 / fan);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
  }
  return net;
}

namespace {

struct ForwardCache {
  Eigen::VectorXd z1, h1, z2, h2, q;
};

Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

ForwardCache forward_cached(const NetParameters& p, StateIndex state) {
  ForwardCache c;
  const auto col = static_cast<Eigen::Index>(state);
  c.z1 = p.layers[0].weight.col(col) + p.layers[0].bias;
  c.h1 = relu(c.z1);
  c.z2 = p.layers[1].weight * c.h1 + p.layers[1].bias;
  c.h2 = relu(c.z2);
  c.q = p.layers[2].weight * c.h2 + p.layers[2].bias;
  return c;
}

// Accumulates d(loss)/d(theta) into `grad` given d(loss)/dq at one state.
void backward(const NetParameters& p, const ForwardCache& c, StateIndex state,
              const Eigen::VectorXd& dq, NetParameters& grad) {
  grad.layers[2].weight.noalias() += dq * c.h2.transpose();
  grad.layers[2].bias += dq;
  Eigen::VectorXd dz2 = p.layers[2].weight.transpose() * dq;
  dz2 = dz2.cwiseProduct((c.z2.array() > 0.0).cast<double>().matrix());
  grad.layers[1].weight.noalias() += dz2 * c.h1.transpose();
  grad.layers[1].bias += dz2;
  Eigen::VectorXd dz1 = p.layers[1].weight.transpose() * dz2;
  dz1 = dz1.cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
  grad.layers[0].weight.col(static_cast<Eigen::Index>(state)) += dz1;
  grad.layers[0].bias += dz1;
}

void check_state(const MlpQNet& net, StateIndex state) {
  if (state >= net.state_count()) {
    throw std::out_of_range("state " + std::to_string(state) + " outside network input range [0, " +
                            std::to_string(net.state_count()) + ")");
  }
}

}  // namespace

Eigen::VectorXd MlpQNet::q_values(StateIndex state) const {
  check_state(*this, state);
  return forward_cached(params_, state).q;
}

std::string MlpQNet::to_json() const {
  nlohmann::json doc;
  doc["format"] = "mlp_qnet";
  doc["version"] = 1;
  doc["dims"] = {state_count_, hidden_, hidden_, action_count_};
  doc["activation"] = "relu";
  auto& layers = doc["layers"];
  layers = nlohmann::json::array();
  for (const auto& l : params_.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"weight", w}, {"bias", b}});
  }
  return doc.dump();
}

MlpQNet MlpQNet::from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (doc.value("format", "") != "mlp_qnet" || doc.value("version", 0) != 1) {
    throw std::invalid_argument("not an mlp_qnet version 1 document");
  }
  const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
  if (dims.size() != 4 || dims[1] != dims[2]) {
    throw std::invalid_argument("mlp_qnet dims must be [states, hidden, hidden, actions]");
  }
  MlpQNet net(dims[0], dims[3], dims[1]);
  const auto& layers = doc.at("layers");
  if (layers.size() != 3) throw std::invalid_argument("mlp_qnet needs exactly 3 layers");
  for (std::size_t i = 0; i < 3; ++i) {
    auto& l = net.params_.layers[i];
    const auto w = layers[i].at("weight").get<std::vector<double>>();
    const auto b = layers[i].at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(l.weight.size()) ||
        b.size() != static_cast<std::size_t>(l.bias.size())) {
      throw std::invalid_argument("mlp_qnet layer " + std::to_string(i) + " has the wrong size");
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = b[static_cast<std::size_t>(r)];
  }
  if (!net.params_.all_finite()) throw std::invalid_argument("mlp_qnet contains non-finite values");
  return net;
}

bool MlpQNet::operator==(const MlpQNet& other) const {
  if (state_count_ != other.state_count_ || action_count_ != other.action_count_ ||
      hidden_ != other.hidden_) {
    return false;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (params_.layers[i].weight != other.params_.layers[i].weight ||
        params_.layers[i].bias != other.params_.layers[i].bias) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd q_forward(const MlpQNet& net, StateIndex state) { return net.q_values(state); }

ActionDistribution softmax(const Eigen::VectorXd& q) {
  if (q.size() == 0) throw std::invalid_argument("softmax of an empty vector");
  const double shift = q.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(q.size()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(q(i) - shift);
    total += p[static_cast<std::size_t>(i)];
  }
  for (double& v : p) v /= total;
  return ActionDistribution(std::move(p));
}

LossAndGradient il_loss_and_grad(const MlpQNet& net, std::span<const ImitationTarget> batch) {
  if (batch.empty()) throw std::invalid_argument("il_loss_and_grad needs a non-empty batch");
  LossAndGradient out{0.0, net.parameters().zeros_like()};
  const double scale = 1.0 / static_cast<double>(batch.size());
  const auto actions = static_cast<Eigen::Index>(net.action_count());
  for (const auto& item : batch) {
    check_state(net, item.state);
    if (item.target.size() != net.action_count()) {
      throw std::invalid_argument("imitation target has the wrong number of actions");
    }
    const ForwardCache c = forward_cached(net.parameters(), item.state);
    const ActionDistribution n = softmax(c.q);
    Eigen::VectorXd p(actions), diff(actions);
    for (Eigen::Index i = 0; i < actions; ++i) {
      p(i) = n[static_cast<std::size_t>(i)];
      diff(i) = p(i) - item.target[static_cast<std::size_t>(i)];
    }
    out.loss += scale * diff.squaredNorm();
    // dL/dp = 2 (p - h) / B, then through the softmax Jacobian diag(p) - p p^T.
    const Eigen::VectorXd dp = 2.0 * scale * diff;
    const Eigen::VectorXd dq = p.cwiseProduct((dp.array() - p.dot(dp)).matrix());
    backward(net.parameters(), c, item.state, dq, out.gradient);
  }
  return out;
}

LossAndGradient td_loss_and_grad(const MlpQNet& net, std::span<const TdSample> batch) {
  if (batch.empty()) throw std::invalid_argument("td_loss_and_grad needs a non-empty batch");
  LossAndGradient out{0.0, net.parameters().zeros_like()};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& item : batch) {
    check_state(net, item.state);
    if (item.action >= net.action_count()) throw std::out_of_range("TD sample action out of range");
    const ForwardCache c = forward_cached(net.parameters(), item.state);
    const auto a = static_cast<Eigen::Index>(item.action);
    const double err = c.q(a) - item.target;
    out.loss += scale * err * err;
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(c.q.size());
    dq(a) = 2.0 * scale * err;
    backward(net.parameters(), c, item.state, dq, out.gradient);
  }
  return out;
}

void apply_gradients(MlpQNet& net, const NetParameters& gradient, double learning_rate) {
  if (!net.parameters().same_shape(gradient)) {
    throw std::invalid_argument("gradient shape does not match the network");
  }
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  for (std::size_t i = 0; i < 3; ++i) {
    net.parameters().layers[i].weight -= learning_rate * gradient.layers[i].weight;
    net.parameters().layers[i].bias -= learning_rate * gradient.layers[i].bias;
  }
}

ActionIndex select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
  const auto& p = dist.probs();
  if (mode == SelectMode::Greedy) {
    return static_cast<ActionIndex>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
  }
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return i;
  }
  // Rounding left u above the last cumulative sum; take the last non-zero entry.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.size() - 1;
}

ActionIndex select_action(const ActionDistribution& dist, SelectMode mode, std::uint64_t seed) {
  Rng rng(seed);
  return select_action(dist, mode, rng);
}

ActionIndex greedy_action(const MlpQNet& net, StateIndex state) {
  const Eigen::VectorXd q = net.q_values(state);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    if (q(i) > q(best)) best = i;
  }
  return static_cast<ActionIndex>(best);
}

Policy net_policy(const MlpQNet& net, SelectMode mode) {
  if (mode == SelectMode::Greedy) {
    return [net](StateIndex s, Rng&) { return greedy_action(net, s); };
  }
  return [net](StateIndex s, Rng& rng) {
    return select_action(softmax(net.q_values(s)), SelectMode::Sample, rng);
  };
}

}  // namespace sublab
