#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sublab/games.hpp"

namespace sublab {

// ---------------------------------------------------------------------------
// Personas

enum class PersonaKind { Human, Fair, Child, Student, AverageHuman };

std::string to_string(PersonaKind kind);
PersonaKind persona_kind_from_string(const std::string& name);

struct PersonaSpec {
  PersonaKind kind = PersonaKind::Human;
  std::string name;
  int age = 0;       // Child only
  double gpa = 0.0;  // Student only

  static PersonaSpec human(std::string name = "Jerry") { return {PersonaKind::Human, std::move(name)}; }
  static PersonaSpec fair(std::string name = "Jerry") { return {PersonaKind::Fair, std::move(name)}; }
  static PersonaSpec child(int age, std::string name = "Janice") {
    return {PersonaKind::Child, std::move(name), age, 0.0};
  }
  static PersonaSpec student(double gpa) { return {PersonaKind::Student, "student", 0, gpa}; }
  static PersonaSpec average_human() { return {PersonaKind::AverageHuman, "you"}; }

  /// Throws std::invalid_argument: age must be positive for Child, gpa in [0, 4.5] for Student.
  void validate() const;
  /// Short tag used in variant names and report columns, e.g. "age5", "gpa4.5".
  std::string label() const;

  bool operator==(const PersonaSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Game states as seen by the demonstration prompts

struct UltimatumState {
  int total = 10;
  int offer = 0;
  bool operator==(const UltimatumState&) const = default;
};

struct MarshmallowState {
  WaitVariant wait = WaitVariant::TwoHours;
  bool operator==(const MarshmallowState&) const = default;
};

struct ProcrastinationState {
  int horizon = 4;
  bool operator==(const ProcrastinationState&) const = default;
};

using GameState = std::variant<UltimatumState, MarshmallowState, GambleState, ProcrastinationState>;

Game game_of(const GameState& state);

/// State and action counts of the space the imitation network is trained on:
/// ultimatum offers x 2, marshmallow MDP states x 2, gamble (role, eps) x 2,
/// procrastination single planning state x H days.
struct IlSpace {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
};

IlSpace il_space(const GameState& state);
/// Index of the state inside its IlSpace (gamble uses the default epsilon grid).
StateIndex il_state_index(const GameState& state);

// ---------------------------------------------------------------------------
// Records and sets

enum class DemoSource { Fixture, FixtureReconstructed, FixtureCorrected, Live };

std::string to_string(DemoSource source);
DemoSource demo_source_from_string(const std::string& name);

struct RecordMeta {
  std::string model = "gpt-4-0613";
  double temperature = 0.5;
  int max_tokens = 5;
  DemoSource source = DemoSource::Fixture;

  bool operator==(const RecordMeta&) const = default;
};

struct DemonstrationRecord {
  PersonaSpec persona;
  GameState state;
  StateIndex state_index = 0;
  std::string system_prompt;
  std::string user_prompt;
  std::string raw_response;
  ActionIndex action = 0;
  RecordMeta meta;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields from JSONL, kept verbatim

  Game game() const { return game_of(state); }
  bool operator==(const DemonstrationRecord&) const = default;
};

/// Demonstrations bound to one game's imitation space.
class DemonstrationSet {
 public:
  DemonstrationSet() = default;
  DemonstrationSet(Game game, std::size_t state_count, std::size_t action_count);

  /// Throws std::invalid_argument if the record belongs to another game or
  /// its indices fall outside the bound space.
  void add(DemonstrationRecord record);

  std::optional<Game> game() const { return game_; }
  std::size_t state_count() const { return state_count_; }
  std::size_t action_count() const { return action_count_; }
  const std::vector<DemonstrationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::vector<ActionIndex> actions_for(StateIndex state) const;
  std::vector<StateIndex> covered_states() const;

  /// Records whose persona matches `persona`, in the same space.
  DemonstrationSet filter(const PersonaSpec& persona) const;

  bool operator==(const DemonstrationSet&) const = default;

 private:
  std::optional<Game> game_;
  std::size_t state_count_ = 0;
  std::size_t action_count_ = 0;
  std::vector<DemonstrationRecord> records_;
};

/// A rejected LLM answer: it never enters a DemonstrationSet.
struct QuarantinedAttempt {
  GameState state;
  std::size_t sequence = 0;
  int attempt = 0;
  std::string raw_response;
  std::string reason;
};

// ---------------------------------------------------------------------------
// Prompts

struct Prompt {
  std::string system;
  std::string user;
  bool operator==(const Prompt&) const = default;
};

/// System and user templates with {name} placeholders.
struct PromptTemplate {
  std::string system;
  std::string user;

  /// Substitutes every {key}. Throws std::invalid_argument if a placeholder
  /// has no value or a brace is left unresolved.
  Prompt render(const std::vector<std::pair<std::string, std::string>>& values) const;
};

/// Exact prompt text for a state and persona. Throws std::invalid_argument
/// for personas the game does not use (e.g. a Child in the ultimatum game).
Prompt render_prompt(const GameState& state, const PersonaSpec& persona);

// ---------------------------------------------------------------------------
// Parsing

class UnparseableResponse : public std::runtime_error {
 public:
  UnparseableResponse(Game game, std::string raw);
  const std::string& raw() const { return raw_; }
  Game game() const { return game_; }

 private:
  Game game_;
  std::string raw_;
};

/// Case-insensitive keyword rules after stripping leading ellipses, quotes
/// and spaces. Ultimatum/gamble: accept | reject. Marshmallow: wait |
/// take | grab. When several keywords occur, the earliest one in the text
/// wins. Procrastination: the first integer, which must lie in 1..horizon,
/// maps to action day-1. Throws UnparseableResponse.
ActionIndex parse_response(Game game, std::string_view raw, int horizon = 4);

// ---------------------------------------------------------------------------
// Embedded fixtures

struct FixtureInfo {
  Game game;
  std::string variant;
  std::size_t records = 0;
  DemoSource source = DemoSource::Fixture;
};

/// Every embedded (game, variant) pair. Variants: ultimatum human|fair;
/// marshmallow 2h|15min (optionally ":ageN"); gamble all|winner|loser;
/// procrastination h4|h10 (optionally ":gpaX").
std::vector<FixtureInfo> list_fixtures();

/// Throws std::invalid_argument for an unknown variant.
DemonstrationSet load_fixtures(Game game, const std::string& variant);

/// Modified marshmallow prompts probing reasoning versus recall, with the
/// recorded answer and the action it must parse to.
struct ReasoningProbe {
  std::string label;
  Prompt prompt;
  std::string answer;
  ActionIndex expected_action = 0;
};

std::vector<ReasoningProbe> reasoning_probes();

// ---------------------------------------------------------------------------
// JSONL persistence

class JsonlError : public std::runtime_error {
 public:
  JsonlError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json record_to_json(const DemonstrationRecord& record);
DemonstrationRecord record_from_json(const nlohmann::json& doc);

/// Header line {"format":"demoset","version":1,...} then one record per line.
std::string to_jsonl(const DemonstrationSet& set);
DemonstrationSet from_jsonl(std::string_view text);

/// Throws std::runtime_error if the file cannot be written or read.
void save_jsonl(const DemonstrationSet& set, const std::string& path);
DemonstrationSet load_jsonl(const std::string& path);

}  // namespace sublab
