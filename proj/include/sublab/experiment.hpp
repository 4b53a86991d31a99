#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sublab/chat_client.hpp"
#include "sublab/games.hpp"
#include "sublab/imitation.hpp"
#include "sublab/rl_training.hpp"

namespace sublab {

// ---------------------------------------------------------------------------
// Targets

enum class TargetOp { Ge, Le, Eq, Within, OneOf };

std::string to_string(TargetOp op);
TargetOp target_op_from_string(const std::string& name);

/// A check on one per-seed metric. The verdict passes when at least
/// `required_fraction` of the seeds satisfy it.
struct Target {
  std::string name;
  std::string metric;
  TargetOp op = TargetOp::Eq;
  double value = 0.0;
  double tolerance = 0.0;       // Within: |metric - value| <= tolerance; Eq uses it as slack
  std::vector<double> options;  // OneOf
  double required_fraction = 1.0;

  bool satisfied_by(double metric_value) const;
};

nlohmann::json target_to_json(const Target& target);
Target target_from_json(const nlohmann::json& doc);

struct TargetVerdict {
  Target target;
  std::size_t seeds_passed = 0;
  std::size_t seeds_total = 0;
  bool pass = false;
};

// ---------------------------------------------------------------------------
// Configuration

enum class VariantKind { Rational, Myopic, Prospect, QuasiHyperbolic, Imitation };

/// One entry of the variant list. `persona` names the demonstration subset
/// for imitation variants: human | fair (ultimatum), ageN (marshmallow),
/// average_human (gamble), gpaX (procrastination).
struct VariantSpec {
  VariantKind kind = VariantKind::Rational;
  double gamma = 1.0;                             // Myopic
  QuasiHyperbolicParams qh;                       // QuasiHyperbolic
  PlannerKind agent = PlannerKind::Sophisticated;  // QuasiHyperbolic
  std::string persona;                            // Imitation
  nlohmann::json overrides = nlohmann::json::object();  // per-variant hyperparameters
  std::optional<std::vector<Target>> targets;           // replaces the built-in targets

  std::string label() const;
};

/// Accepts the shorthands "rational", "prospect", "human-il", "fair-il",
/// "il" and objects such as {"kind":"myopic","gamma":0.3},
/// {"kind":"qh","beta":0.4,"delta":1,"agent":"naive"}, {"kind":"il","persona":"age5"}.
VariantSpec variant_from_json(const nlohmann::json& doc);
nlohmann::json variant_to_json(const VariantSpec& variant);

/// Persona named by a variant's "persona" field. Throws
/// std::invalid_argument if the game does not use it.
PersonaSpec persona_from_label(Game game, const std::string& label);

/// Every state the game's imitation policy is fitted on.
std::vector<GameState> imitation_states(Game game, int ultimatum_total = 10,
                                        WaitVariant wait = WaitVariant::TwoHours, int horizon = 4);

enum class DemoSourceKind { Fixture, Jsonl, Live };

struct DemoSourceConfig {
  DemoSourceKind kind = DemoSourceKind::Fixture;
  std::string path;          // Jsonl
  ChatClientConfig endpoint;  // Live
  std::size_t per_state = 10;  // Live
};

struct Hyperparameters {
  QLearningHyper q_learning;
  ImitationConfig imitation;
  UltimatumJointConfig joint;
};

struct ExperimentConfig {
  Game experiment = Game::Ultimatum;
  std::vector<VariantSpec> variants;
  std::vector<std::uint64_t> seeds;
  Hyperparameters hyper;
  DemoSourceConfig demos;
  int ultimatum_total = 10;
  WaitVariant wait_variant = WaitVariant::TwoHours;
  int procrastination_horizon = 4;
  std::string output_dir = "out";
  std::size_t max_parallel = 0;  // 0: hardware concurrency

  /// Throws std::invalid_argument when there are no variants or seeds, a
  /// variant does not belong to the experiment, a label repeats, or a
  /// referenced fixture variant does not exist.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Reports

/// Columnar series; the first column is the step index.
struct Curve {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<std::pair<std::string, double>> metrics;  // insertion-ordered
  nlohmann::json decisions = nlohmann::json::object();
  std::vector<Curve> curves;

  std::optional<double> metric(const std::string& name) const;
};

struct VariantReport {
  VariantSpec spec;
  std::string label;
  std::vector<SeedOutcome> seeds;
  std::vector<TargetVerdict> verdicts;

  bool pass() const;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<VariantReport> variants;
  /// Checks that relate several variants (e.g. ordering across GPAs).
  std::vector<TargetVerdict> comparisons;

  bool pass() const;
  const VariantReport* find(const std::string& label) const;
};

/// Built-in targets for a variant of an experiment.
std::vector<Target> default_targets(const ExperimentConfig& config, const VariantSpec& variant);

/// Runs every (variant, seed) pair, in parallel, and evaluates targets. A
/// diverging run marks only its own seed as failed.
ExperimentReport run_experiment(const ExperimentConfig& config);

nlohmann::json summary_json(const ExperimentReport& report);

enum class ReportFormat { Csv, Json, Both };

/// Writes <dir>/summary.json and/or <dir>/summary.csv plus one CSV per
/// curve under <dir>/<variant>/seed_<s>/ and decisions.json next to them.
/// Returns the written paths. Throws std::runtime_error if a file cannot be written.
std::vector<std::string> emit_report(const ExperimentReport& report, const std::string& dir,
                                     ReportFormat format = ReportFormat::Both);

std::string curve_csv(const Curve& curve);

}  // namespace sublab
