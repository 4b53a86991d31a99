#include "sublab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sublab/format.hpp"

namespace sublab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Targets

std::string to_string(TargetOp op) {
  switch (op) {
    case TargetOp::Ge: return "ge";
    case TargetOp::Le: return "le";
    case TargetOp::Eq: return "eq";
    case TargetOp::Within: return "within";
    case TargetOp::OneOf: return "one_of";
  }
  throw std::invalid_argument("unknown target op");
}

TargetOp target_op_from_string(const std::string& name) {
  for (auto op : {TargetOp::Ge, TargetOp::Le, TargetOp::Eq, TargetOp::Within, TargetOp::OneOf}) {
    if (to_string(op) == name) return op;
  }
  throw std::invalid_argument("unknown target op '" + name + "'");
}

bool Target::satisfied_by(double m) const {
  if (!std::isfinite(m)) return false;
  switch (op) {
    case TargetOp::Ge: return m >= value - tolerance;
    case TargetOp::Le: return m <= value + tolerance;
    case TargetOp::Eq:
    case TargetOp::Within: return std::abs(m - value) <= tolerance;
    case TargetOp::OneOf:
      return std::any_of(options.begin(), options.end(),
                         [&](double o) { return std::abs(m - o) <= tolerance; });
  }
  return false;
}

json target_to_json(const Target& t) {
  json j{{"name", t.name}, {"metric", t.metric}, {"op", to_string(t.op)}, {"required_fraction", t.required_fraction}};
  if (t.op == TargetOp::OneOf) {
    j["options"] = t.options;
  } else {
    j["value"] = t.value;
  }
  if (t.tolerance != 0.0) j["tolerance"] = t.tolerance;
  return j;
}

Target target_from_json(const json& j) {
  Target t;
  t.metric = j.at("metric").get<std::string>();
  t.name = j.value("name", t.metric);
  t.op = target_op_from_string(j.at("op").get<std::string>());
  if (t.op == TargetOp::OneOf) {
    t.options = j.at("options").get<std::vector<double>>();
    if (t.options.empty()) throw std::invalid_argument("one_of target needs options");
  } else {
    t.value = j.at("value").get<double>();
  }
  t.tolerance = j.value("tolerance", 0.0);
  t.required_fraction = j.value("required_fraction", 1.0);
  if (!(t.tolerance >= 0.0)) throw std::invalid_argument("target tolerance must be >= 0");
  if (!(t.required_fraction >= 0.0 && t.required_fraction <= 1.0)) {
    throw std::invalid_argument("target required_fraction must lie in [0, 1]");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Variants

namespace {

const std::map<std::string, VariantKind> kKindNames{
    {"rational", VariantKind::Rational}, {"myopic", VariantKind::Myopic},
    {"prospect", VariantKind::Prospect}, {"qh", VariantKind::QuasiHyperbolic},
    {"il", VariantKind::Imitation}};

std::string kind_name(VariantKind kind) {
  for (const auto& [name, k] : kKindNames) {
    if (k == kind) return name;
  }
  throw std::invalid_argument("unknown variant kind");
}

PlannerKind planner_from_string(const std::string& name) {
  if (name == "sophisticated") return PlannerKind::Sophisticated;
  if (name == "naive") return PlannerKind::Naive;
  throw std::invalid_argument("unknown planner agent '" + name + "'");
}

}  // namespace

std::string VariantSpec::label() const {
  switch (kind) {
    case VariantKind::Rational: return "rational";
    case VariantKind::Prospect: return "prospect";
    case VariantKind::Myopic: return "myopic-g" + short_number(gamma);
    case VariantKind::QuasiHyperbolic:
      return "qh-" + to_string(agent) + "-b" + short_number(qh.beta) + "-d" + short_number(qh.delta);
    case VariantKind::Imitation:
      if (persona == "human" || persona == "fair") return persona + "-il";
      return persona.empty() ? "il" : "il-" + persona;
  }
  throw std::invalid_argument("unknown variant kind");
}

VariantSpec variant_from_json(const json& doc) {
  VariantSpec v;
  if (doc.is_string()) {
    const auto name = doc.get<std::string>();
    if (name == "human-il" || name == "fair-il") {
      v.kind = VariantKind::Imitation;
      v.persona = name.substr(0, name.find('-'));
      return v;
    }
    const auto it = kKindNames.find(name);
    if (it == kKindNames.end()) throw std::invalid_argument("unknown variant '" + name + "'");
    v.kind = it->second;
    if (v.kind == VariantKind::Myopic) throw std::invalid_argument("myopic variant needs a gamma");
    return v;
  }
  if (!doc.is_object()) throw std::invalid_argument("variant must be a string or an object");
  const auto name = doc.at("kind").get<std::string>();
  if (name == "human-il" || name == "fair-il") {
    v.kind = VariantKind::Imitation;
    v.persona = name.substr(0, name.find('-'));
  } else {
    const auto it = kKindNames.find(name);
    if (it == kKindNames.end()) throw std::invalid_argument("unknown variant kind '" + name + "'");
    v.kind = it->second;
  }
  switch (v.kind) {
    case VariantKind::Myopic:
      v.gamma = doc.at("gamma").get<double>();
      if (!(v.gamma >= 0.0 && v.gamma <= 1.0)) throw std::invalid_argument("myopic gamma must lie in [0, 1]");
      break;
    case VariantKind::QuasiHyperbolic:
      v.qh.beta = doc.at("beta").get<double>();
      v.qh.delta = doc.value("delta", 1.0);
      v.qh.validate();
      v.agent = planner_from_string(doc.value("agent", std::string("sophisticated")));
      break;
    case VariantKind::Imitation:
      if (doc.contains("persona")) v.persona = doc.at("persona").get<std::string>();
      break;
    default: break;
  }
  if (doc.contains("hyperparameters")) {
    v.overrides = doc.at("hyperparameters");
    if (!v.overrides.is_object()) throw std::invalid_argument("variant hyperparameters must be an object");
  }
  if (doc.contains("targets")) {
    std::vector<Target> targets;
    for (const auto& t : doc.at("targets")) targets.push_back(target_from_json(t));
    v.targets = std::move(targets);
  }
  return v;
}

json variant_to_json(const VariantSpec& v) {
  json j{{"kind", kind_name(v.kind)}};
  switch (v.kind) {
    case VariantKind::Myopic: j["gamma"] = v.gamma; break;
    case VariantKind::QuasiHyperbolic:
      j["beta"] = v.qh.beta;
      j["delta"] = v.qh.delta;
      j["agent"] = to_string(v.agent);
      break;
    case VariantKind::Imitation: j["persona"] = v.persona; break;
    default: break;
  }
  if (!v.overrides.empty()) j["hyperparameters"] = v.overrides;
  if (v.targets) {
    j["targets"] = json::array();
    for (const auto& t : *v.targets) j["targets"].push_back(target_to_json(t));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Hyperparameters

namespace {

json hyper_to_json(const Hyperparameters& h) {
  const auto& q = h.q_learning;
  const auto& il = h.imitation;
  const auto& jt = h.joint;
  return {
      {"q_learning",
       {{"learning_rate", q.learning_rate},
        {"episodes", q.episodes},
        {"epsilon_start", q.epsilon_start},
        {"epsilon_end", q.epsilon_end},
        {"decay_fraction", q.decay_fraction},
        {"gamma", std::get<Exponential>(q.discount.variant()).gamma},
        {"hidden", q.hidden}}},
      {"imitation",
       {{"epochs", il.epochs},
        {"batch_size", il.batch_size},
        {"learning_rate", il.learning_rate},
        {"kernel", il.density.kernel == Kernel::Delta ? "delta" : "gaussian"},
        {"bandwidth", il.density.bandwidth},
        {"smoothing", il.density.epsilon}}},
      {"joint",
       {{"episodes", jt.episodes},
        {"epsilon_start", jt.epsilon_start},
        {"epsilon_end", jt.epsilon_end},
        {"decay_fraction", jt.decay_fraction},
        {"responder_learning_rate", jt.responder_learning_rate},
        {"hidden", jt.hidden}}},
  };
}

void reject_unknown_keys(const json& doc, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!doc.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
  }
}

Hyperparameters hyper_from_json(const json& doc) {
  Hyperparameters h;
  reject_unknown_keys(doc, {"q_learning", "imitation", "joint"}, "hyperparameters");
  if (doc.contains("q_learning")) {
    const auto& q = doc.at("q_learning");
    reject_unknown_keys(q, {"learning_rate", "episodes", "epsilon_start", "epsilon_end", "decay_fraction", "gamma", "hidden"},
                        "q_learning");
    h.q_learning.learning_rate = q.value("learning_rate", h.q_learning.learning_rate);
    h.q_learning.episodes = q.value("episodes", h.q_learning.episodes);
    h.q_learning.epsilon_start = q.value("epsilon_start", h.q_learning.epsilon_start);
    h.q_learning.epsilon_end = q.value("epsilon_end", h.q_learning.epsilon_end);
    h.q_learning.decay_fraction = q.value("decay_fraction", h.q_learning.decay_fraction);
    h.q_learning.discount = Exponential{q.value("gamma", 1.0)};
    h.q_learning.hidden = q.value("hidden", h.q_learning.hidden);
  }
  if (doc.contains("imitation")) {
    const auto& il = doc.at("imitation");
    reject_unknown_keys(il, {"epochs", "batch_size", "learning_rate", "kernel", "bandwidth", "smoothing"}, "imitation");
    h.imitation.epochs = il.value("epochs", h.imitation.epochs);
    h.imitation.batch_size = il.value("batch_size", h.imitation.batch_size);
    h.imitation.learning_rate = il.value("learning_rate", h.imitation.learning_rate);
    const auto kernel = il.value("kernel", std::string("delta"));
    if (kernel != "delta" && kernel != "gaussian") throw std::invalid_argument("unknown kernel '" + kernel + "'");
    h.imitation.density.kernel = kernel == "delta" ? Kernel::Delta : Kernel::Gaussian;
    h.imitation.density.bandwidth = il.value("bandwidth", h.imitation.density.bandwidth);
    h.imitation.density.epsilon = il.value("smoothing", h.imitation.density.epsilon);
  }
  if (doc.contains("joint")) {
    const auto& jt = doc.at("joint");
    reject_unknown_keys(jt, {"episodes", "epsilon_start", "epsilon_end", "decay_fraction", "responder_learning_rate", "hidden"},
                        "joint");
    h.joint.episodes = jt.value("episodes", h.joint.episodes);
    h.joint.epsilon_start = jt.value("epsilon_start", h.joint.epsilon_start);
    h.joint.epsilon_end = jt.value("epsilon_end", h.joint.epsilon_end);
    h.joint.decay_fraction = jt.value("decay_fraction", h.joint.decay_fraction);
    h.joint.responder_learning_rate = jt.value("responder_learning_rate", h.joint.responder_learning_rate);
    h.joint.hidden = jt.value("hidden", h.joint.hidden);
  }
  return h;
}

Hyperparameters effective_hyper(const ExperimentConfig& config, const VariantSpec& v) {
  if (v.overrides.empty()) return config.hyper;
  json merged = hyper_to_json(config.hyper);
  merged.merge_patch(v.overrides);
  return hyper_from_json(merged);
}

std::string fixture_variant(const ExperimentConfig& config, const VariantSpec& v) {
  switch (config.experiment) {
    case Game::Ultimatum: return v.persona;
    case Game::Marshmallow: return to_string(config.wait_variant) + ":" + v.persona;
    case Game::Gamble: return "all";
    case Game::Procrastination: return "h" + std::to_string(config.procrastination_horizon) + ":" + v.persona;
  }
  throw std::invalid_argument("unknown experiment");
}

ProcrastinationSpec procrastination_spec(int horizon) {
  return horizon == 4 ? ProcrastinationSpec::four_day() : ProcrastinationSpec::from_recurrence(horizon);
}

}  // namespace

PersonaSpec persona_from_label(Game game, const std::string& label) {
  switch (game) {
    case Game::Ultimatum:
      if (label == "human") return PersonaSpec::human();
      if (label == "fair") return PersonaSpec::fair();
      break;
    case Game::Marshmallow:
      if (label.size() == 4 && label.rfind("age", 0) == 0 && label[3] >= '1' && label[3] <= '9') {
        return PersonaSpec::child(label[3] - '0');
      }
      break;
    case Game::Gamble:
      if (label.empty() || label == "average_human") return PersonaSpec::average_human();
      break;
    case Game::Procrastination:
      if (label.rfind("gpa", 0) == 0) {
        try {
          std::size_t used = 0;
          const double gpa = std::stod(label.substr(3), &used);
          if (used == label.size() - 3) return PersonaSpec::student(gpa);
        } catch (const std::exception&) {
        }
      }
      break;
  }
  throw std::invalid_argument("persona '" + label + "' is not used by the " + to_string(game) + " experiment");
}

std::vector<GameState> imitation_states(Game game, int ultimatum_total, WaitVariant wait, int horizon) {
  std::vector<GameState> states;
  switch (game) {
    case Game::Ultimatum:
      for (int x = 0; x <= ultimatum_total; ++x) states.push_back(UltimatumState{ultimatum_total, x});
      break;
    case Game::Marshmallow: states.push_back(MarshmallowState{wait}); break;
    case Game::Gamble: {
      const GambleSpec spec;
      for (StateIndex s = 0; s < spec.state_count(); ++s) states.push_back(spec.state_at(s));
      break;
    }
    case Game::Procrastination: states.push_back(ProcrastinationState{horizon}); break;
  }
  return states;
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (variants.empty()) throw std::invalid_argument("experiment needs at least one variant");
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  UltimatumSpec{ultimatum_total}.validate();
  if (procrastination_horizon < 1) throw std::invalid_argument("procrastination horizon must be at least 1");

  std::set<std::string> labels;
  for (const auto& v : variants) {
    const std::string label = v.label();
    if (!labels.insert(label).second) throw std::invalid_argument("variant '" + label + "' appears twice");
    std::set<VariantKind> allowed;
    switch (experiment) {
      case Game::Ultimatum: allowed = {VariantKind::Rational, VariantKind::Imitation}; break;
      case Game::Marshmallow: allowed = {VariantKind::Rational, VariantKind::Myopic, VariantKind::Imitation}; break;
      case Game::Gamble: allowed = {VariantKind::Rational, VariantKind::Prospect, VariantKind::Imitation}; break;
      case Game::Procrastination:
        allowed = {VariantKind::Rational, VariantKind::QuasiHyperbolic, VariantKind::Imitation};
        break;
    }
    if (!allowed.count(v.kind)) {
      throw std::invalid_argument("variant '" + label + "' does not apply to the " + to_string(experiment) + " experiment");
    }
    const Hyperparameters h = effective_hyper(*this, v);
    h.q_learning.validate();
    h.imitation.validate();
    h.joint.validate();
    if (v.kind == VariantKind::Imitation) {
      persona_from_label(experiment, v.persona);
      if (demos.kind == DemoSourceKind::Fixture) {
        const std::string name = fixture_variant(*this, v);
        const auto all = list_fixtures();
        const bool known = std::any_of(all.begin(), all.end(), [&](const FixtureInfo& f) {
          return f.game == experiment && f.variant == name;
        });
        if (!known) throw std::invalid_argument("no " + to_string(experiment) + " fixture '" + name + "'");
      }
    }
  }
  if (demos.kind == DemoSourceKind::Jsonl && demos.path.empty()) {
    throw std::invalid_argument("jsonl demonstration source needs a path");
  }
}

ExperimentConfig config_from_json(const json& doc) {
  reject_unknown_keys(doc, {"experiment", "variants", "seeds", "hyperparameters", "demonstrations", "game", "output_dir",
                            "max_parallel"},
                      "experiment config");
  ExperimentConfig c;
  c.experiment = game_from_string(doc.at("experiment").get<std::string>());
  for (const auto& v : doc.at("variants")) c.variants.push_back(variant_from_json(v));
  c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  if (doc.contains("hyperparameters")) c.hyper = hyper_from_json(doc.at("hyperparameters"));
  if (doc.contains("demonstrations")) {
    const auto& d = doc.at("demonstrations");
    const auto source = d.at("source").get<std::string>();
    if (source == "fixture") {
      c.demos.kind = DemoSourceKind::Fixture;
    } else if (source == "jsonl") {
      c.demos.kind = DemoSourceKind::Jsonl;
      c.demos.path = d.at("path").get<std::string>();
    } else if (source == "live") {
      c.demos.kind = DemoSourceKind::Live;
      c.demos.per_state = d.value("per_state", c.demos.per_state);
      if (d.contains("endpoint")) {
        const auto& e = d.at("endpoint");
        auto& ep = c.demos.endpoint;
        ep.base_url = e.value("base_url", ep.base_url);
        ep.path = e.value("path", ep.path);
        ep.api_key_env = e.value("api_key_env", ep.api_key_env);
        ep.model = e.value("model", ep.model);
        ep.temperature = e.value("temperature", ep.temperature);
        ep.max_tokens = e.value("max_tokens", ep.max_tokens);
        ep.max_attempts = e.value("max_attempts", ep.max_attempts);
        ep.max_in_flight = e.value("max_in_flight", ep.max_in_flight);
        ep.timeout_seconds = e.value("timeout_seconds", ep.timeout_seconds);
      }
    } else {
      throw std::invalid_argument("unknown demonstration source '" + source + "'");
    }
  }
  if (doc.contains("game")) {
    const auto& g = doc.at("game");
    c.ultimatum_total = g.value("total", c.ultimatum_total);
    if (g.contains("wait_variant")) c.wait_variant = wait_variant_from_string(g.at("wait_variant").get<std::string>());
    c.procrastination_horizon = g.value("horizon", c.procrastination_horizon);
  }
  c.output_dir = doc.value("output_dir", c.output_dir);
  c.max_parallel = doc.value("max_parallel", c.max_parallel);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"experiment", to_string(c.experiment)}, {"variants", json::array()}, {"seeds", c.seeds},
         {"hyperparameters", hyper_to_json(c.hyper)}};
  for (const auto& v : c.variants) j["variants"].push_back(variant_to_json(v));
  switch (c.demos.kind) {
    case DemoSourceKind::Fixture: j["demonstrations"] = {{"source", "fixture"}}; break;
    case DemoSourceKind::Jsonl: j["demonstrations"] = {{"source", "jsonl"}, {"path", c.demos.path}}; break;
    case DemoSourceKind::Live: {
      const auto& ep = c.demos.endpoint;
      j["demonstrations"] = {{"source", "live"},
                             {"per_state", c.demos.per_state},
                             {"endpoint",
                              {{"base_url", ep.base_url},
                               {"path", ep.path},
                               {"api_key_env", ep.api_key_env},
                               {"model", ep.model},
                               {"temperature", ep.temperature},
                               {"max_tokens", ep.max_tokens},
                               {"max_attempts", ep.max_attempts},
                               {"max_in_flight", ep.max_in_flight},
                               {"timeout_seconds", ep.timeout_seconds}}}};
      break;
    }
  }
  switch (c.experiment) {
    case Game::Ultimatum: j["game"] = {{"total", c.ultimatum_total}}; break;
    case Game::Marshmallow: j["game"] = {{"wait_variant", to_string(c.wait_variant)}}; break;
    case Game::Gamble: j["game"] = json::object(); break;
    case Game::Procrastination: j["game"] = {{"horizon", c.procrastination_horizon}}; break;
  }
  j["output_dir"] = c.output_dir;
  return j;
}

// ---------------------------------------------------------------------------
// Report helpers

std::optional<double> SeedOutcome::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  return std::nullopt;
}

bool VariantReport::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const TargetVerdict& v) { return v.pass; });
}

bool ExperimentReport::pass() const {
  return std::all_of(variants.begin(), variants.end(), [](const VariantReport& v) { return v.pass(); }) &&
         std::all_of(comparisons.begin(), comparisons.end(), [](const TargetVerdict& v) { return v.pass; });
}

const VariantReport* ExperimentReport::find(const std::string& label) const {
  for (const auto& v : variants) {
    if (v.label == label) return &v;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Default targets

namespace {

Target make_target(std::string metric, TargetOp op, double value, double tolerance = 0.0, double fraction = 1.0) {
  Target t;
  t.name = metric;
  t.metric = std::move(metric);
  t.op = op;
  t.value = value;
  t.tolerance = tolerance;
  t.required_fraction = fraction;
  return t;
}

std::string gamble_metric(const char* prefix, const GambleState& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%s_e%.1f", prefix, to_string(s.role).c_str(), s.epsilon);
  return buf;
}

double fixture_rate(const DemonstrationSet& demos, StateIndex state, ActionIndex action) {
  const auto actions = demos.actions_for(state);
  if (actions.empty()) return 0.0;
  return static_cast<double>(std::count(actions.begin(), actions.end(), action)) / static_cast<double>(actions.size());
}

std::vector<Target> il_rate_targets(const std::string& metric, double rate) {
  if (rate == 0.0) return {make_target(metric, TargetOp::Le, 0.05)};
  if (rate == 1.0) return {make_target(metric, TargetOp::Ge, 0.95)};
  return {make_target(metric, TargetOp::Within, rate, 0.1)};
}

}  // namespace

std::vector<Target> default_targets(const ExperimentConfig& config, const VariantSpec& v) {
  std::vector<Target> out;
  switch (config.experiment) {
    case Game::Ultimatum:
      if (v.kind == VariantKind::Rational) {
        out.push_back(make_target("final_keep", TargetOp::Ge, 8.0, 0.0, 0.8));
        out.push_back(make_target("responder_accepts_positive", TargetOp::Eq, 1.0, 0.0, 0.8));
      } else if (v.persona == "human") {
        Target keep = make_target("final_keep", TargetOp::OneOf, 0.0, 0.0, 0.8);
        keep.options = {7.0, 8.0};
        out.push_back(keep);
        out.push_back(make_target("max_acceptance_error", TargetOp::Le, 0.1, 0.0, 0.8));
      } else if (v.persona == "fair") {
        out.push_back(make_target("final_offer", TargetOp::Eq, 5.0, 0.0, 0.8));
        out.push_back(make_target("max_acceptance_error", TargetOp::Le, 0.1, 0.0, 0.8));
      }
      break;
    case Game::Marshmallow:
      if (v.kind == VariantKind::Rational || v.kind == VariantKind::Myopic) {
        const double gamma = v.kind == VariantKind::Rational ? 1.0 : v.gamma;
        if (2.0 * gamma != 1.0) {
          const bool wait = 2.0 * gamma > 1.0;
          out.push_back(make_target("wait_probability", TargetOp::Eq, wait ? 1.0 : 0.0, 0.0, 0.9));
          out.push_back(make_target("greedy_return", TargetOp::Eq, wait ? 2.0 : 1.0, 0.0, 0.9));
        }
      } else if (config.demos.kind == DemoSourceKind::Fixture) {
        const auto demos = load_fixtures(Game::Marshmallow, fixture_variant(config, v));
        const auto more = il_rate_targets("wait_probability", fixture_rate(demos, marshmallow::kDecide, marshmallow::kWait));
        out.insert(out.end(), more.begin(), more.end());
      }
      break;
    case Game::Gamble: {
      const GambleSpec spec;
      for (StateIndex s = 0; s < spec.state_count(); ++s) {
        const GambleState gs = spec.state_at(s);
        const std::string metric = gamble_metric("accept", gs);
        if (v.kind == VariantKind::Rational && gs.epsilon > 0.0) {
          out.push_back(make_target(metric, TargetOp::Eq, rational_gamble_decision(spec, gs) == gamble::kAccept ? 1.0 : 0.0));
        } else if (v.kind == VariantKind::Prospect && std::abs(gs.epsilon - 0.1) < 1e-12) {
          out.push_back(make_target(metric, TargetOp::Eq, prospect_gamble_decision(spec, gs) == gamble::kAccept ? 1.0 : 0.0));
        } else if (v.kind == VariantKind::Imitation && config.demos.kind == DemoSourceKind::Fixture) {
          const auto demos = load_fixtures(Game::Gamble, "all");
          out.push_back(make_target(metric, TargetOp::Within, fixture_rate(demos, s, gamble::kAccept), 0.1));
        }
      }
      break;
    }
    case Game::Procrastination: {
      const auto spec = procrastination_spec(config.procrastination_horizon);
      if (v.kind == VariantKind::Rational) {
        out.push_back(make_target("write_day", TargetOp::Eq, rational_write_day(spec)));
      } else if (v.kind == VariantKind::QuasiHyperbolic) {
        out.push_back(make_target("sophisticated_minus_naive", TargetOp::Le, 0.0));
      } else if (config.demos.kind == DemoSourceKind::Fixture) {
        const auto demos = load_fixtures(Game::Procrastination, fixture_variant(config, v));
        double mean = 0.0;
        for (const auto& r : demos.records()) mean += static_cast<double>(r.action + 1);
        mean /= static_cast<double>(demos.size());
        out.push_back(make_target("mean_write_day", TargetOp::Within, mean, 0.5));
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runners

namespace {

struct VariantContext {
  const ExperimentConfig* config = nullptr;
  VariantSpec spec;
  Hyperparameters hyper;
  std::optional<DemonstrationSet> demos;  // imitation variants
};

Curve rewards_curve(const std::vector<double>& rewards) {
  Curve c{"rewards", {"episode", "reward"}, {}};
  c.rows.reserve(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) c.rows.push_back({static_cast<double>(i), rewards[i]});
  return c;
}

Curve loss_curve(const std::vector<double>& loss) {
  Curve c{"il_loss", {"epoch", "loss"}, {}};
  c.rows.reserve(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) c.rows.push_back({static_cast<double>(i), loss[i]});
  return c;
}

QLearningHyper seeded(QLearningHyper h, std::uint64_t seed, std::optional<double> gamma = std::nullopt) {
  h.seed = seed;
  if (gamma) h.discount = Exponential{*gamma};
  return h;
}

ImitationResult run_imitation(const VariantContext& ctx, std::uint64_t seed, SeedOutcome& out) {
  ImitationConfig il = ctx.hyper.imitation;
  il.seed = seed;
  auto result = imitate(*ctx.demos, il);
  out.curves.push_back(loss_curve(result.loss_curve));
  out.metrics.emplace_back("final_loss", result.loss_curve.back());
  return result;
}

void run_ultimatum(const VariantContext& ctx, std::uint64_t seed, SeedOutcome& out) {
  const UltimatumSpec spec{ctx.config->ultimatum_total};
  UltimatumJointResult joint = [&] {
    if (ctx.spec.kind == VariantKind::Rational) {
      return train_ultimatum_joint(spec, LearnedResponder{}, ctx.hyper.joint, seed);
    }
    auto il = run_imitation(ctx, seed, out);
    out.metrics.emplace_back("max_acceptance_error", max_density_error(il.net, *ctx.demos, ctx.hyper.imitation.density));
    return train_ultimatum_joint(spec, FixedResponder{il.net}, ctx.hyper.joint, seed);
  }();

  bool accepts_positive = true;
  json responder = json::array();
  for (int x = 0; x <= spec.total; ++x) {
    const auto s = static_cast<StateIndex>(x);
    const ActionIndex greedy = greedy_action(joint.responder, s);
    if (x >= 1 && greedy != ultimatum::kAccept) accepts_positive = false;
    responder.push_back({{"offer", x},
                         {"greedy", greedy == ultimatum::kAccept ? "accept" : "reject"},
                         {"accept_probability", softmax(q_forward(joint.responder, s))[ultimatum::kAccept]}});
  }
  out.metrics.emplace_back("final_offer", joint.final_offer());
  out.metrics.emplace_back("final_keep", joint.final_keep());
  out.metrics.emplace_back("responder_accepts_positive", accepts_positive ? 1.0 : 0.0);
  out.decisions = {{"proposer_offer", joint.final_offer()},
                   {"proposer_keep", joint.final_keep()},
                   {"arm_estimates", joint.proposer.estimates()},
                   {"arm_counts", joint.proposer.counts()},
                   {"responder", responder}};
  Curve c{"rewards", {"episode", "proposer_reward", "responder_reward"}, {}};
  c.rows.reserve(joint.proposer_rewards.size());
  for (std::size_t i = 0; i < joint.proposer_rewards.size(); ++i) {
    c.rows.push_back({static_cast<double>(i), joint.proposer_rewards[i], joint.responder_rewards[i]});
  }
  out.curves.push_back(std::move(c));
}

void run_marshmallow(const VariantContext& ctx, std::uint64_t seed, SeedOutcome& out) {
  const MdpSpec env = build_env(MarshmallowSpec{1.0, 2.0, ctx.config->wait_variant});
  if (ctx.spec.kind == VariantKind::Imitation) {
    auto il = run_imitation(ctx, seed, out);
    const auto n = softmax(q_forward(il.net, marshmallow::kDecide));
    out.metrics.emplace_back("wait_probability", n[marshmallow::kWait]);
    out.metrics.emplace_back("expected_return", n[marshmallow::kTakeNow] * 1.0 + n[marshmallow::kWait] * 2.0);
    out.decisions = {{"decide", {{"take_now", n[marshmallow::kTakeNow]}, {"wait", n[marshmallow::kWait]}}}};
    return;
  }
  const double gamma = ctx.spec.kind == VariantKind::Rational ? 1.0 : ctx.spec.gamma;
  auto rl = train_q_learning(env, seeded(ctx.hyper.q_learning, seed, gamma));
  const auto q = q_forward(rl.net, marshmallow::kDecide);
  const ActionIndex greedy = greedy_action(rl.net, marshmallow::kDecide);
  const auto traj = rollout(net_policy(rl.net, SelectMode::Greedy), env, derive_seed(seed, 0xe7a1));
  out.metrics.emplace_back("wait_probability", greedy == marshmallow::kWait ? 1.0 : 0.0);
  out.metrics.emplace_back("greedy_return", traj.raw_return());
  out.metrics.emplace_back("q_take_now", q[marshmallow::kTakeNow]);
  out.metrics.emplace_back("q_wait", q[marshmallow::kWait]);
  out.decisions = {{"decide", greedy == marshmallow::kWait ? "wait" : "take_now"}, {"gamma", gamma}};
  out.curves.push_back(rewards_curve(rl.reward_curve));
}

void run_gamble(const VariantContext& ctx, std::uint64_t seed, SeedOutcome& out) {
  const GambleSpec spec;
  json table = json::array();
  std::optional<MlpQNet> net;
  if (ctx.spec.kind == VariantKind::Imitation) {
    net = run_imitation(ctx, seed, out).net;
  } else {
    const MdpSpec env = ctx.spec.kind == VariantKind::Prospect ? build_prospect_env(spec, {}) : build_env(spec);
    auto rl = train_q_learning(env, seeded(ctx.hyper.q_learning, seed));
    out.curves.push_back(rewards_curve(rl.reward_curve));
    net = std::move(rl.net);
  }
  double agreement = 0.0;
  for (StateIndex s = 0; s < spec.state_count(); ++s) {
    const GambleState gs = spec.state_at(s);
    double accept;
    if (ctx.spec.kind == VariantKind::Imitation) {
      accept = softmax(q_forward(*net, s))[gamble::kAccept];
    } else {
      accept = greedy_action(*net, s) == gamble::kAccept ? 1.0 : 0.0;
      const ActionIndex oracle = ctx.spec.kind == VariantKind::Prospect ? prospect_gamble_decision(spec, gs)
                                                                        : rational_gamble_decision(spec, gs);
      agreement += (accept == 1.0) == (oracle == gamble::kAccept) ? 1.0 : 0.0;
    }
    out.metrics.emplace_back(gamble_metric("accept", gs), accept);
    table.push_back({{"role", to_string(gs.role)}, {"epsilon", gs.epsilon}, {"accept_probability", accept}});
  }
  if (ctx.spec.kind != VariantKind::Imitation) out.metrics.emplace_back("oracle_agreement", agreement);
  out.decisions = {{"states", table}};
}

int first_write_day(const Trajectory& t) {
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].action == procrastination::kWrite) return static_cast<int>(i) + 1;
  }
  return 0;
}

void run_procrastination(const VariantContext& ctx, std::uint64_t seed, SeedOutcome& out) {
  const int horizon = ctx.config->procrastination_horizon;
  const auto spec = procrastination_spec(horizon);
  const MdpSpec env = build_env(spec);
  switch (ctx.spec.kind) {
    case VariantKind::Rational: {
      auto rl = train_q_learning(env, seeded(ctx.hyper.q_learning, seed));
      const auto traj = rollout(net_policy(rl.net, SelectMode::Greedy), env, derive_seed(seed, 0xe7a1));
      out.metrics.emplace_back("write_day", first_write_day(traj));
      out.metrics.emplace_back("greedy_return", traj.raw_return());
      out.decisions = {{"write_day", first_write_day(traj)}};
      out.curves.push_back(rewards_curve(rl.reward_curve));
      return;
    }
    case VariantKind::QuasiHyperbolic: {
      const auto trace = qh_write_day(spec, ctx.spec.qh, ctx.spec.agent);
      const auto soph = qh_write_day(spec, ctx.spec.qh, PlannerKind::Sophisticated).decision_day;
      const auto naive = qh_write_day(spec, ctx.spec.qh, PlannerKind::Naive).decision_day;
      out.metrics.emplace_back("write_day", trace.decision_day);
      out.metrics.emplace_back("sophisticated_minus_naive", soph - naive);
      json days = json::array();
      for (const auto& d : trace.days) {
        days.push_back({{"day", d.day},
                        {"write_value", d.write_value},
                        {"procrastinate_value", d.procrastinate_value},
                        {"planned_day", d.planned_day},
                        {"writes", d.writes}});
      }
      out.decisions = {{"write_day", trace.decision_day}, {"trace", days}};
      return;
    }
    default: break;
  }
  auto il = run_imitation(ctx, seed, out);
  const auto days = softmax(q_forward(il.net, 0));
  double mean = 0.0;
  for (std::size_t d = 0; d < days.size(); ++d) mean += static_cast<double>(d + 1) * days[d];
  const auto hazard = write_hazard(days);
  const Policy policy = [hazard](StateIndex s, Rng& rng) -> ActionIndex {
    if (s % 2 == 1) return procrastination::kProcrastinate;  // already written
    return rng.bernoulli(hazard[s / 2]) ? procrastination::kWrite : procrastination::kProcrastinate;
  };
  const auto stats = evaluate_policy(policy, env, Exponential{1.0}, 1000, derive_seed(seed, 0xe7a1));
  out.metrics.emplace_back("mean_write_day", mean);
  out.metrics.emplace_back("first_day_probability", days[0]);
  out.metrics.emplace_back("last_day_probability", days[days.size() - 1]);
  out.metrics.emplace_back("expected_return", stats.mean);
  out.decisions = {{"write_day_distribution", days.probs()}, {"write_hazard", hazard}};
}

SeedOutcome run_seed(const VariantContext& ctx, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    switch (ctx.config->experiment) {
      case Game::Ultimatum: run_ultimatum(ctx, seed, out); break;
      case Game::Marshmallow: run_marshmallow(ctx, seed, out); break;
      case Game::Gamble: run_gamble(ctx, seed, out); break;
      case Game::Procrastination: run_procrastination(ctx, seed, out); break;
    }
  } catch (const TrainingDivergence& e) {
    out = SeedOutcome{};
    out.seed = seed;
    out.ok = false;
    out.error = std::string("diverged: ") + e.what();
  } catch (const std::exception& e) {
    out = SeedOutcome{};
    out.seed = seed;
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

DemonstrationSet acquire_demos(const ExperimentConfig& config, const VariantSpec& v) {
  const PersonaSpec persona = persona_from_label(config.experiment, v.persona);
  switch (config.demos.kind) {
    case DemoSourceKind::Fixture: return load_fixtures(config.experiment, fixture_variant(config, v));
    case DemoSourceKind::Jsonl: {
      auto all = load_jsonl(config.demos.path);
      if (all.game() != config.experiment) {
        throw std::invalid_argument(config.demos.path + " does not hold " + to_string(config.experiment) + " demonstrations");
      }
      auto subset = all.filter(persona);
      if (config.experiment == Game::Marshmallow || config.experiment == Game::Procrastination) {
        DemonstrationSet matching(config.experiment, subset.state_count(), subset.action_count());
        for (const auto& r : subset.records()) {
          const bool keep = config.experiment == Game::Marshmallow
                                ? std::get<MarshmallowState>(r.state).wait == config.wait_variant
                                : std::get<ProcrastinationState>(r.state).horizon == config.procrastination_horizon;
          if (keep) matching.add(r);
        }
        subset = std::move(matching);
      }
      if (subset.empty()) throw std::invalid_argument(config.demos.path + " has no demonstrations for " + v.label());
      return subset;
    }
    case DemoSourceKind::Live: {
      const auto states = imitation_states(config.experiment, config.ultimatum_total, config.wait_variant,
                                           config.procrastination_horizon);
      auto report = generate_demonstrations(config.demos.endpoint, states, persona, config.demos.per_state);
      if (report.set.empty()) {
        throw std::runtime_error("live generation produced no demonstrations" +
                                 (report.errors.empty() ? std::string() : ": " + report.errors.front()));
      }
      return std::move(report.set);
    }
  }
  throw std::invalid_argument("unknown demonstration source");
}

TargetVerdict evaluate_target(const Target& t, const std::vector<SeedOutcome>& seeds) {
  TargetVerdict v{t, 0, seeds.size(), false};
  for (const auto& s : seeds) {
    const auto m = s.ok ? s.metric(t.metric) : std::nullopt;
    if (m && t.satisfied_by(*m)) ++v.seeds_passed;
  }
  const auto required = static_cast<std::size_t>(std::ceil(t.required_fraction * static_cast<double>(seeds.size()) - 1e-9));
  v.pass = v.seeds_total > 0 && v.seeds_passed >= required;
  return v;
}

// Per-seed ordering check across imitation variants sorted by GPA.
std::optional<TargetVerdict> gpa_ordering(const ExperimentReport& report, const std::string& metric, const std::string& name) {
  std::vector<std::pair<double, const VariantReport*>> il;
  for (const auto& v : report.variants) {
    if (v.spec.kind == VariantKind::Imitation) {
      il.emplace_back(persona_from_label(Game::Procrastination, v.spec.persona).gpa, &v);
    }
  }
  if (il.size() < 2) return std::nullopt;
  std::sort(il.begin(), il.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Target t;
  t.name = name;
  t.metric = metric;
  t.op = TargetOp::Eq;
  t.value = 1.0;
  TargetVerdict verdict{t, 0, report.config.seeds.size(), false};
  for (std::size_t k = 0; k < report.config.seeds.size(); ++k) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < il.size() && ok; ++i) {
      const auto a = il[i].second->seeds[k];
      const auto b = il[i + 1].second->seeds[k];
      const auto ma = a.ok ? a.metric(metric) : std::nullopt;
      const auto mb = b.ok ? b.metric(metric) : std::nullopt;
      ok = ma && mb && *mb < *ma;
    }
    if (ok) ++verdict.seeds_passed;
  }
  verdict.pass = verdict.seeds_passed == verdict.seeds_total;
  return verdict;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  std::vector<VariantContext> contexts;
  std::vector<std::optional<std::string>> setup_errors;
  for (const auto& v : config.variants) {
    VariantContext ctx{&report.config, v, effective_hyper(config, v), std::nullopt};
    std::optional<std::string> error;
    if (v.kind == VariantKind::Imitation) {
      try {
        ctx.demos = acquire_demos(config, v);
      } catch (const std::exception& e) {
        error = std::string("demonstrations unavailable: ") + e.what();
      }
    }
    contexts.push_back(std::move(ctx));
    setup_errors.push_back(std::move(error));
  }

  const std::size_t n_seeds = config.seeds.size();
  const std::size_t n_tasks = contexts.size() * n_seeds;
  std::vector<SeedOutcome> outcomes(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      const std::size_t vi = i / n_seeds;
      const std::uint64_t seed = config.seeds[i % n_seeds];
      if (setup_errors[vi]) {
        outcomes[i].seed = seed;
        outcomes[i].ok = false;
        outcomes[i].error = *setup_errors[vi];
      } else {
        outcomes[i] = run_seed(contexts[vi], seed);
      }
    }
  };
  std::size_t n_threads = config.max_parallel ? config.max_parallel : std::thread::hardware_concurrency();
  n_threads = std::max<std::size_t>(1, std::min(n_threads, n_tasks));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (std::size_t vi = 0; vi < contexts.size(); ++vi) {
    VariantReport vr;
    vr.spec = contexts[vi].spec;
    vr.label = vr.spec.label();
    for (std::size_t k = 0; k < n_seeds; ++k) vr.seeds.push_back(std::move(outcomes[vi * n_seeds + k]));
    const auto targets = vr.spec.targets ? *vr.spec.targets : default_targets(config, vr.spec);
    for (const auto& t : targets) vr.verdicts.push_back(evaluate_target(t, vr.seeds));
    report.variants.push_back(std::move(vr));
  }

  if (config.experiment == Game::Procrastination) {
    if (auto v = gpa_ordering(report, "mean_write_day", "mean_write_day_decreases_with_gpa")) {
      report.comparisons.push_back(*v);
    }
    if (config.procrastination_horizon == 10) {
      if (auto v = gpa_ordering(report, "last_day_probability", "last_day_probability_decreases_with_gpa")) {
        report.comparisons.push_back(*v);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

json verdict_json(const TargetVerdict& v) {
  json j = target_to_json(v.target);
  j["seeds_passed"] = v.seeds_passed;
  j["seeds_total"] = v.seeds_total;
  j["pass"] = v.pass;
  return j;
}

json metrics_json(const std::vector<std::pair<std::string, double>>& metrics) {
  json j = json::object();
  for (const auto& [k, v] : metrics) j[k] = v;
  return j;
}

std::string seed_dir(const VariantReport& v, const SeedOutcome& s) {
  return v.label + "/seed_" + std::to_string(s.seed);
}

void write_file(const fs::path& path, const std::string& content, std::vector<std::string>& written) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
  written.push_back(path.string());
}

}  // namespace

json summary_json(const ExperimentReport& report) {
  json config = config_to_json(report.config);
  config.erase("output_dir");  // summaries do not depend on where they are written
  json j{{"experiment", to_string(report.config.experiment)}, {"config", config}};
  json variants = json::array();
  for (const auto& v : report.variants) {
    json seeds = json::array();
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (const auto& s : v.seeds) {
      json sj{{"seed", s.seed}, {"ok", s.ok}, {"metrics", metrics_json(s.metrics)}, {"decisions", s.decisions}};
      if (!s.ok) sj["error"] = s.error;
      json curves = json::array();
      for (const auto& c : s.curves) curves.push_back(seed_dir(v, s) + "/" + c.name + ".csv");
      sj["curves"] = curves;
      seeds.push_back(sj);
      for (const auto& [k, m] : s.metrics) {
        sums[k].first += m;
        sums[k].second += 1;
      }
    }
    json means = json::object();
    for (const auto& [k, sn] : sums) means[k] = sn.first / static_cast<double>(sn.second);
    json verdicts = json::array();
    for (const auto& vd : v.verdicts) verdicts.push_back(verdict_json(vd));
    variants.push_back({{"label", v.label},
                        {"spec", variant_to_json(v.spec)},
                        {"seeds", report.config.seeds},
                        {"per_seed", seeds},
                        {"mean_metrics", means},
                        {"verdicts", verdicts},
                        {"pass", v.pass()}});
  }
  j["variants"] = variants;
  json comparisons = json::array();
  for (const auto& c : report.comparisons) comparisons.push_back(verdict_json(c));
  j["comparisons"] = comparisons;
  j["pass"] = report.pass();
  return j;
}

std::string curve_csv(const Curve& curve) {
  std::string out;
  for (std::size_t i = 0; i < curve.columns.size(); ++i) out += (i ? "," : "") + curve.columns[i];
  out += "\n";
  for (const auto& row : curve.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      // Step indices print as integers.
      out += i == 0 ? std::to_string(static_cast<long long>(row[i])) : format_double(row[i]);
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> emit_report(const ExperimentReport& report, const std::string& dir, ReportFormat format) {
  std::vector<std::string> written;
  const fs::path root(dir);
  if (format != ReportFormat::Csv) write_file(root / "summary.json", summary_json(report).dump(2) + "\n", written);
  if (format != ReportFormat::Json) {
    std::string csv = "variant,seed,metric,value\n";
    for (const auto& v : report.variants) {
      for (const auto& s : v.seeds) {
        for (const auto& [k, m] : s.metrics) {
          csv += v.label + "," + std::to_string(s.seed) + "," + k + "," + format_double(m) + "\n";
        }
      }
    }
    write_file(root / "summary.csv", csv, written);
    std::string verdicts = "scope,target,metric,op,seeds_passed,seeds_total,pass\n";
    auto add = [&](const std::string& scope, const TargetVerdict& vd) {
      verdicts += scope + "," + vd.target.name + "," + vd.target.metric + "," + to_string(vd.target.op) + "," +
                  std::to_string(vd.seeds_passed) + "," + std::to_string(vd.seeds_total) + "," +
                  (vd.pass ? "true" : "false") + "\n";
    };
    for (const auto& v : report.variants) {
      for (const auto& vd : v.verdicts) add(v.label, vd);
    }
    for (const auto& c : report.comparisons) add("experiment", c);
    write_file(root / "verdicts.csv", verdicts, written);
  }
  for (const auto& v : report.variants) {
    for (const auto& s : v.seeds) {
      const fs::path sd = root / seed_dir(v, s);
      for (const auto& c : s.curves) write_file(sd / (c.name + ".csv"), curve_csv(c), written);
      if (s.ok) write_file(sd / "decisions.json", s.decisions.dump(2) + "\n", written);
    }
  }
  return written;
}

}  // namespace sublab
