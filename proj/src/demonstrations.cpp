#include "sublab/demonstrations.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sublab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Personas

std::string to_string(PersonaKind kind) {
  switch (kind) {
    case PersonaKind::Human: return "human";
    case PersonaKind::Fair: return "fair";
    case PersonaKind::Child: return "child";
    case PersonaKind::Student: return "student";
    case PersonaKind::AverageHuman: return "average_human";
  }
  throw std::invalid_argument("unknown persona kind");
}

PersonaKind persona_kind_from_string(const std::string& name) {
  for (auto k : {PersonaKind::Human, PersonaKind::Fair, PersonaKind::Child, PersonaKind::Student,
                 PersonaKind::AverageHuman}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown persona kind '" + name + "'");
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void PersonaSpec::validate() const {
  if (kind == PersonaKind::Child && age <= 0) {
    throw std::invalid_argument("child persona needs a positive age");
  }
  if (kind == PersonaKind::Student && !(gpa >= 0.0 && gpa <= 4.5)) {
    throw std::invalid_argument("student GPA must lie in [0, 4.5]");
  }
}

std::string PersonaSpec::label() const {
  switch (kind) {
    case PersonaKind::Child: return "age" + std::to_string(age);
    case PersonaKind::Student: return "gpa" + format_number(gpa);
    default: return to_string(kind);
  }
}

// ---------------------------------------------------------------------------
// States

Game game_of(const GameState& state) {
  struct {
    Game operator()(const UltimatumState&) const { return Game::Ultimatum; }
    Game operator()(const MarshmallowState&) const { return Game::Marshmallow; }
    Game operator()(const GambleState&) const { return Game::Gamble; }
    Game operator()(const ProcrastinationState&) const { return Game::Procrastination; }
  } visitor;
  return std::visit(visitor, state);
}

IlSpace il_space(const GameState& state) {
  if (const auto* u = std::get_if<UltimatumState>(&state)) {
    return {static_cast<std::size_t>(u->total) + 1, 2};
  }
  if (std::holds_alternative<MarshmallowState>(state)) return {2, 2};
  if (std::holds_alternative<GambleState>(state)) return {GambleSpec{}.state_count(), 2};
  const auto& p = std::get<ProcrastinationState>(state);
  return {1, static_cast<std::size_t>(p.horizon)};
}

StateIndex il_state_index(const GameState& state) {
  if (const auto* u = std::get_if<UltimatumState>(&state)) {
    if (u->offer < 0 || u->offer > u->total) throw std::invalid_argument("ultimatum offer outside 0..T");
    return static_cast<StateIndex>(u->offer);
  }
  if (std::holds_alternative<MarshmallowState>(state)) return marshmallow::kDecide;
  if (const auto* g = std::get_if<GambleState>(&state)) return GambleSpec{}.state_index(*g);
  return 0;
}

std::string to_string(DemoSource source) {
  switch (source) {
    case DemoSource::Fixture: return "Fixture";
    case DemoSource::FixtureReconstructed: return "Fixture-Reconstructed";
    case DemoSource::FixtureCorrected: return "Fixture-Corrected";
    case DemoSource::Live: return "Live";
  }
  throw std::invalid_argument("unknown demonstration source");
}

DemoSource demo_source_from_string(const std::string& name) {
  for (auto s : {DemoSource::Fixture, DemoSource::FixtureReconstructed, DemoSource::FixtureCorrected,
                 DemoSource::Live}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown demonstration source '" + name + "'");
}

// ---------------------------------------------------------------------------
// DemonstrationSet

DemonstrationSet::DemonstrationSet(Game game, std::size_t state_count, std::size_t action_count)
    : game_(game), state_count_(state_count), action_count_(action_count) {
  if (state_count == 0 || action_count == 0) {
    throw std::invalid_argument("demonstration set needs positive state and action counts");
  }
}

void DemonstrationSet::add(DemonstrationRecord record) {
  if (!game_) throw std::invalid_argument("demonstration set is not bound to a game");
  if (record.game() != *game_) {
    throw std::invalid_argument("record for " + to_string(record.game()) + " added to a " +
                                to_string(*game_) + " set");
  }
  if (record.state_index >= state_count_) {
    throw std::invalid_argument("record state index " + std::to_string(record.state_index) +
                                " outside the set's " + std::to_string(state_count_) + " states");
  }
  if (record.action >= action_count_) {
    throw std::invalid_argument("record action " + std::to_string(record.action) +
                                " outside the set's " + std::to_string(action_count_) + " actions");
  }
  records_.push_back(std::move(record));
}

std::vector<ActionIndex> DemonstrationSet::actions_for(StateIndex state) const {
  std::vector<ActionIndex> out;
  for (const auto& r : records_) {
    if (r.state_index == state) out.push_back(r.action);
  }
  return out;
}

std::vector<StateIndex> DemonstrationSet::covered_states() const {
  std::set<StateIndex> seen;
  for (const auto& r : records_) seen.insert(r.state_index);
  return {seen.begin(), seen.end()};
}

DemonstrationSet DemonstrationSet::filter(const PersonaSpec& persona) const {
  DemonstrationSet out = *this;
  out.records_.clear();
  for (const auto& r : records_) {
    if (r.persona == persona) out.records_.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts

Prompt PromptTemplate::render(const std::vector<std::pair<std::string, std::string>>& values) const {
  auto fill = [&](const std::string& tmpl) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
      if (tmpl[i] == '{') {
        const auto close = tmpl.find('}', i);
        if (close == std::string::npos) throw std::invalid_argument("unterminated placeholder in template");
        const std::string key = tmpl.substr(i + 1, close - i - 1);
        const auto it = std::find_if(values.begin(), values.end(),
                                     [&](const auto& kv) { return kv.first == key; });
        if (it == values.end()) throw std::invalid_argument("no value for placeholder {" + key + "}");
        out += it->second;
        i = close + 1;
      } else if (tmpl[i] == '}') {
        throw std::invalid_argument("stray '}' in template");
      } else {
        out += tmpl[i++];
      }
    }
    return out;
  };
  return {fill(system), fill(user)};
}

namespace {

const PromptTemplate kUltimatumHuman{
    "Impersonate a human called {name}",
    "John receives ${T}, and he proposes to offer {name} {x} and keep {keep} for himself. "
    "If {name} accepts they both get the agreed amount, but if {name} rejects they both "
    "receive nothing. Continue the sentence: '{name} decides to'"};

const PromptTemplate kUltimatumFair{
    "Impersonate {name} who cares a lot about fairness",
    kUltimatumHuman.user};

const PromptTemplate kMarshmallow{
    "You are {name} a {Y} years old child.",
    "{name} is offered to get one candy now, or to wait for {wait_duration} to eventually get "
    "two candies. Continue the following sentence '{name} decides to'"};

const PromptTemplate kGambleWinner{
    "You impersonate an average human.",
    "You won an initial ${stake} bet against Tom. Before you collect your reward, you can choose "
    "to add a second bet of ${stake} with {epsilon_phrase} probability to win. If you win the "
    "second bet you will double your gain from the initial bet, but if you loose you will gain "
    "nothing. Continue the following sentence 'You decides to accept/reject the second bet'"};

const PromptTemplate kGambleLoser{
    "You impersonate an average human.",
    "You lost an initial ${stake} bet against Tom. Before you pay your debt, you can choose to "
    "add a second bet of ${stake} with {epsilon_phrase} probability to win. If you win the second "
    "bet you will recover your loss from the initial bet, but if you loose you will double your "
    "loss. Continue the following sentence 'You decides to accept/reject the second bet'"};

const PromptTemplate kProcrastination{
    "You impersonate a student with GPA {gpa}, who loves watching movies. GPA measures the "
    "students commitment towards their academics.",
    "The theatre has a line up of increasingly better movies as days pass. The student has a "
    "deadline to submit a course report within the next {deadline_days} days. The student needs "
    "to pick one day to write the report, which means they will miss the movie on that day. "
    "Continue the sentence 'The student writes the report on day '"};

std::string number_word(int n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five",
                                "six",  "seven", "eight", "nine", "ten"};
  return n >= 0 && n <= 10 ? words[n] : std::to_string(n);
}

void require_persona(const PersonaSpec& persona, std::initializer_list<PersonaKind> allowed,
                     Game game) {
  persona.validate();
  if (std::find(allowed.begin(), allowed.end(), persona.kind) == allowed.end()) {
    throw std::invalid_argument(to_string(persona.kind) + " persona is not used by the " +
                                to_string(game) + " game");
  }
}

}  // namespace

Prompt render_prompt(const GameState& state, const PersonaSpec& persona) {
  if (const auto* u = std::get_if<UltimatumState>(&state)) {
    require_persona(persona, {PersonaKind::Human, PersonaKind::Fair}, Game::Ultimatum);
    if (u->offer < 0 || u->offer > u->total) throw std::invalid_argument("ultimatum offer outside 0..T");
    const auto& tmpl = persona.kind == PersonaKind::Human ? kUltimatumHuman : kUltimatumFair;
    return tmpl.render({{"name", persona.name},
                        {"T", std::to_string(u->total)},
                        {"x", std::to_string(u->offer)},
                        {"keep", std::to_string(u->total - u->offer)}});
  }
  if (const auto* m = std::get_if<MarshmallowState>(&state)) {
    require_persona(persona, {PersonaKind::Child}, Game::Marshmallow);
    const std::string wait = m->wait == WaitVariant::TwoHours ? "2 more hours" : "15 minutes";
    return kMarshmallow.render(
        {{"name", persona.name}, {"Y", std::to_string(persona.age)}, {"wait_duration", wait}});
  }
  if (const auto* g = std::get_if<GambleState>(&state)) {
    require_persona(persona, {PersonaKind::AverageHuman}, Game::Gamble);
    const bool winner = g->role == GambleRole::Winner;
    const double p = winner ? 0.5 + g->epsilon : 0.5 - g->epsilon;
    const auto& tmpl = winner ? kGambleWinner : kGambleLoser;
    return tmpl.render({{"stake", format_number(GambleSpec{}.stake)}, {"epsilon_phrase", format_number(p)}});
  }
  const auto& p = std::get<ProcrastinationState>(state);
  require_persona(persona, {PersonaKind::Student}, Game::Procrastination);
  if (p.horizon < 1) throw std::invalid_argument("procrastination horizon must be at least 1");
  return kProcrastination.render({{"gpa", format_number(persona.gpa)},
                                  {"deadline_days", number_word(p.horizon)}});
}

// ---------------------------------------------------------------------------
// Parsing

UnparseableResponse::UnparseableResponse(Game game, std::string raw)
    : std::runtime_error("unparseable " + to_string(game) + " response: \"" + raw + "\""),
      game_(game),
      raw_(std::move(raw)) {}

namespace {

std::string normalize(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (unsigned char c : raw) s += static_cast<char>(std::tolower(c));
  // Strip leading whitespace, dots, ASCII quotes/backticks and the UTF-8
  // ellipsis and curly quotes (E2 80 A6 / 98 / 99 / 9C / 9D).
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c) || c == '.' || c == '\'' || c == '"' || c == '`') {
      ++i;
    } else if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      i += 3;
    } else {
      break;
    }
  }
  return s.substr(i);
}

// Position of `word` starting at a word boundary, or npos.
std::size_t find_word(const std::string& text, std::string_view word) {
  std::size_t pos = text.find(word);
  while (pos != std::string::npos) {
    if (pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]))) return pos;
    pos = text.find(word, pos + 1);
  }
  return std::string::npos;
}

struct KeywordRule {
  std::string_view keyword;
  ActionIndex action;
};

std::optional<ActionIndex> earliest(const std::string& text, std::initializer_list<KeywordRule> rules) {
  std::size_t best_pos = std::string::npos;
  std::optional<ActionIndex> best;
  for (const auto& rule : rules) {
    const std::size_t pos = find_word(text, rule.keyword);
    if (pos < best_pos) {
      best_pos = pos;
      best = rule.action;
    }
  }
  return best;
}

}  // namespace

ActionIndex parse_response(Game game, std::string_view raw, int horizon) {
  const std::string text = normalize(raw);
  std::optional<ActionIndex> action;
  switch (game) {
    case Game::Ultimatum:
      action = earliest(text, {{"accept", ultimatum::kAccept}, {"reject", ultimatum::kReject}});
      break;
    case Game::Gamble:
      action = earliest(text, {{"accept", gamble::kAccept}, {"reject", gamble::kReject}});
      break;
    case Game::Marshmallow:
      action = earliest(text, {{"wait", marshmallow::kWait},
                               {"take", marshmallow::kTakeNow},
                               {"grab", marshmallow::kTakeNow}});
      break;
    case Game::Procrastination: {
      const auto it = std::find_if(text.begin(), text.end(),
                                   [](unsigned char c) { return std::isdigit(c); });
      if (it != text.end()) {
        long day = 0;
        for (auto j = it; j != text.end() && std::isdigit(static_cast<unsigned char>(*j)); ++j) {
          day = day * 10 + (*j - '0');
          if (day > 1000000) break;
        }
        if (day >= 1 && day <= horizon) action = static_cast<ActionIndex>(day - 1);
      }
      break;
    }
  }
  if (!action) throw UnparseableResponse(game, std::string(raw));
  return *action;
}

// ---------------------------------------------------------------------------
// JSON

JsonlError::JsonlError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

json persona_to_json(const PersonaSpec& p) {
  json j{{"kind", to_string(p.kind)}, {"name", p.name}};
  if (p.kind == PersonaKind::Child) j["age"] = p.age;
  if (p.kind == PersonaKind::Student) j["gpa"] = p.gpa;
  return j;
}

PersonaSpec persona_from_json(const json& j) {
  PersonaSpec p;
  p.kind = persona_kind_from_string(j.at("kind").get<std::string>());
  p.name = j.at("name").get<std::string>();
  if (p.kind == PersonaKind::Child) p.age = j.at("age").get<int>();
  if (p.kind == PersonaKind::Student) p.gpa = j.at("gpa").get<double>();
  p.validate();
  return p;
}

json state_to_json(const GameState& state, StateIndex index) {
  json j{{"index", index}};
  if (const auto* u = std::get_if<UltimatumState>(&state)) {
    j["total"] = u->total;
    j["offer"] = u->offer;
  } else if (const auto* m = std::get_if<MarshmallowState>(&state)) {
    j["wait"] = to_string(m->wait);
  } else if (const auto* g = std::get_if<GambleState>(&state)) {
    j["role"] = to_string(g->role);
    j["epsilon"] = g->epsilon;
  } else {
    j["horizon"] = std::get<ProcrastinationState>(state).horizon;
  }
  return j;
}

GameState state_from_json(Game game, const json& j) {
  switch (game) {
    case Game::Ultimatum: return UltimatumState{j.at("total").get<int>(), j.at("offer").get<int>()};
    case Game::Marshmallow: return MarshmallowState{wait_variant_from_string(j.at("wait").get<std::string>())};
    case Game::Gamble: {
      const auto role = j.at("role").get<std::string>();
      if (role != "winner" && role != "loser") throw std::invalid_argument("unknown gamble role '" + role + "'");
      return GambleState{role == "winner" ? GambleRole::Winner : GambleRole::Loser,
                         j.at("epsilon").get<double>()};
    }
    case Game::Procrastination: return ProcrastinationState{j.at("horizon").get<int>()};
  }
  throw std::invalid_argument("unknown game");
}

const std::set<std::string> kRecordKeys{"game",        "persona",      "state",
                                        "system_prompt", "user_prompt", "raw_response",
                                        "action",      "meta"};

}  // namespace

json record_to_json(const DemonstrationRecord& r) {
  json j = r.extra;
  j["game"] = to_string(r.game());
  j["persona"] = persona_to_json(r.persona);
  j["state"] = state_to_json(r.state, r.state_index);
  j["system_prompt"] = r.system_prompt;
  j["user_prompt"] = r.user_prompt;
  j["raw_response"] = r.raw_response;
  j["action"] = r.action;
  j["meta"] = {{"model", r.meta.model},
               {"temperature", r.meta.temperature},
               {"max_tokens", r.meta.max_tokens},
               {"source", to_string(r.meta.source)}};
  return j;
}

DemonstrationRecord record_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  DemonstrationRecord r;
  const Game game = game_from_string(j.at("game").get<std::string>());
  r.persona = persona_from_json(j.at("persona"));
  r.state = state_from_json(game, j.at("state"));
  r.state_index = j.at("state").at("index").get<StateIndex>();
  r.system_prompt = j.at("system_prompt").get<std::string>();
  r.user_prompt = j.at("user_prompt").get<std::string>();
  r.raw_response = j.at("raw_response").get<std::string>();
  r.action = j.at("action").get<ActionIndex>();
  const auto& m = j.at("meta");
  r.meta.model = m.at("model").get<std::string>();
  r.meta.temperature = m.at("temperature").get<double>();
  r.meta.max_tokens = m.at("max_tokens").get<int>();
  r.meta.source = demo_source_from_string(m.at("source").get<std::string>());
  for (const auto& [key, value] : j.items()) {
    if (!kRecordKeys.count(key)) r.extra[key] = value;
  }
  return r;
}

std::string to_jsonl(const DemonstrationSet& set) {
  // An unbound empty set has nothing to describe: it round-trips through a zero-byte file.
  if (!set.game() && set.empty()) return {};
  json header{{"format", "demoset"}, {"version", 1}};
  if (set.game()) {
    header["game"] = to_string(*set.game());
    header["state_count"] = set.state_count();
    header["action_count"] = set.action_count();
  }
  std::string out = header.dump() + "\n";
  for (const auto& r : set.records()) out += record_to_json(r).dump() + "\n";
  return out;
}

DemonstrationSet from_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  DemonstrationSet set;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw JsonlError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!doc.is_object() || doc.value("format", "") != "demoset") {
        throw JsonlError(line_no, "missing {\"format\":\"demoset\"} header");
      }
      if (doc.value("version", 0) != 1) throw JsonlError(line_no, "unsupported demoset version");
      have_header = true;
      if (doc.contains("game")) {
        try {
          set = DemonstrationSet(game_from_string(doc.at("game").get<std::string>()),
                                 doc.at("state_count").get<std::size_t>(),
                                 doc.at("action_count").get<std::size_t>());
        } catch (const std::exception& e) {
          throw JsonlError(line_no, std::string("bad header: ") + e.what());
        }
      }
      continue;
    }
    try {
      set.add(record_from_json(doc));
    } catch (const std::exception& e) {
      throw JsonlError(line_no, std::string("bad record: ") + e.what());
    }
  }
  return set;
}

void save_jsonl(const DemonstrationSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_jsonl(set);
  if (!out) throw std::runtime_error("failed writing " + path);
}

DemonstrationSet load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

}  // namespace sublab
