#include <array>
#include <cstdio>
#include <stdexcept>

#include "sublab/demonstrations.hpp"

namespace sublab {

namespace {

using Row = std::array<const char*, 10>;

// Raw answers, ten per offer x = 0..10.
const std::array<Row, 11> kUltimatumHuman{{
    {"reject the proposal", "reject the offer", "reject the proposal", "reject the proposal", "reject the offer", "reject the proposal", "reject the offer", "reject the proposal", "reject the offer", "reject the proposal"},
    {"reject the offer", "reject the offer", "reject the offer", "reject the offer", "reject the proposal", "reject the proposal", "reject the proposal", "reject the proposal", "reject the offer", "reject John's proposal"},
    {"accept the offer", "reject the offer", "reject the offer", "reject the proposal", "accept the offer", "reject the proposal", "reject the offer", "reject the offer", "reject the offer", "reject the proposal"},
    {"accept the offer", "accept John's offer", "accept John's proposal", "accept the offer", "reject the offer", "accept the proposal", "accept John's proposal", "accept the offer", "accept the offer", "accept the offer because he"},
    {"accept the offer", "reject the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer"},
    {"accept the proposal", "accept John's proposal", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept John's proposal", "accept the offer", "accept the offer", "accept the offer"},
    {"accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept John's proposal", "accept the offer", "accept the offer", "accept the offer"},
    {"accept the offer", "accept the offer", "accept the proposal", "accept the offer", "accept the offer", "'Jerry decides to accept", "accept the offer", "accept the offer", "accept the offer", "accept the offer"},
    {"accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept John's proposal"},
    {"accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the proposal", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer"},
    {"accept the offer", "accept the offer", "accept the offer", "accept the offer", "accept the offer", "'Jerry decides to accept", "accept the offer", "accept the offer", "accept the offer", "accept the offer"},
}};

const std::array<Row, 11> kUltimatumFair{{
    {"'reject the proposal.", "reject the proposal", "reject the proposal", "reject the proposal", "reject the proposal. He", "reject the offer", "reject the proposal. \"", "reject the proposal. He", "reject the proposal", "reject the proposal. He"},
    {"reject the proposal", "reject the proposal", "reject the offer", "reject the proposal. He", "reject the offer. He", "reject the offer. \"", "reject John's proposal.", "reject the proposal. He", "reject the offer", "reject John's proposal."},
    {"reject the proposal", "reject the proposal", "reject the proposal. He", "reject the offer. He", "reject the proposal", "reject the offer", "reject the proposal. He", "reject the offer", "reject the proposal. He", "reject the proposal"},
    {"reject the proposal. He", "reject the offer. He", "reject the offer", "reject the offer", "reject the proposal", "reject the offer. He", "reject the offer", "reject the proposal", "reject the offer", "reject the offer. \""},
    {"reject the proposal. He", "reject the proposal", "reject the offer", "reject the proposal. He", "reject the proposal. \"", "reject the offer. As", "reject the offer", "reject the proposal", "reject John's proposal", "reject the offer"},
    {"accept the proposal", "accept the proposal", "reject the proposal", "accept the proposal", "reject the proposal", "reject the proposal. \"", "accept the proposal", "reject the offer. Even", "reject the offer", "reject the proposal"},
    {"reject the offer", "reject the proposal. He", "reject the proposal", "reject the proposal. He", "reject the offer", "reject the offer. He", "reject the proposition. In", "reject the proposal. \"", "reject the offer", "reject the offer"},
    {"reject the proposal", "reject the proposal. He", "reject the proposal", "reject the proposal", "reject the offer", "reject the offer. He", "reject the proposal. \"", "reject the offer", "reject the offer", "reject the proposal. \""},
    {"reject the offer", "reject the proposal. He", "reject John's proposal.", "reject the proposal", "reject the proposal", "reject John's proposal.", "reject the proposal. Being", "reject the offer. He", "reject John's proposal.", "reject the proposal. He"},
    {"reject the offer. Although", "reject the offer. Despite", "reject the offer. He", "reject the proposal. He", "reject the offer. Despite", "reject the proposal. \"", "reject the offer. Despite", "reject John's offer.", "reject the proposal", "reject the proposal. Despite"},
    {"accept John's proposal because", "accept the proposal", "accept John's proposal", "accept John's proposal because", "accept John's offer", "accept John's proposal", "accept the proposal", "accept John's proposal", "accept the proposal because it", "accept the proposal"},
}};

// The x = 4 row lists "reject the offer" as its second answer while its own
// rate column (and the summary rate table) reports 100% acceptance.
constexpr int kCorrectedOffer = 4;
constexpr std::size_t kCorrectedPosition = 1;
constexpr const char* kCorrectedAnswer = "accept the offer";

// Raw answers for ages 2..5.
const std::array<Row, 4> kMarshmallowTwoHours{{
    {"take the one candy now", "...grab the one candy", "...grab the one candy", "take the one candy now", "take the one candy now", "take the one candy now", "take the one candy now", "take the one candy now", "take the one candy now", "take the candy now,"},
    {"...take the one candy", "...take the one candy", "wait for 2 more", "...take one candy now", "wait for 2 more", "...take the one candy", "...take the one candy", "...take the one candy", "...take one candy now", "...take one candy now"},
    {"wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for two more hours", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more"},
    {"wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more", "wait for 2 more"},
}};

const std::array<Row, 4> kMarshmallowFifteenMinutes{{
    {"...grab the one candy", "take the one candy now", "...grab the one candy", "...grab the one candy", "...grab the candy now", "take one candy now,", "take the one candy now", "take the one candy now", "grab the one candy now", "wait for 15 minutes"},
    {"...take one candy now", "wait for 15 minutes", "...wait for 15", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "...grab the candy now", "wait for 15 minutes", "wait for 15 minutes"},
    {"wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "...wait for 15", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes"},
    {"wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes", "wait for 15 minutes"},
}};

// The 15-minute age-2 list shows one waiting answer while the rate table
// reports 0.2; the first answer is replaced so the rate table holds.
constexpr int kCorrectedAge = 2;
constexpr std::size_t kCorrectedWaitPosition = 0;
constexpr const char* kCorrectedWaitAnswer = "wait for 15 minutes";

// Accept counts out of ten, epsilon = 0, 0.1, 0.2, 0.3, 0.4. Only the rates
// are published, so the raw texts are reconstructed to match them.
constexpr std::array<int, 5> kGambleWinnerAccepts{3, 5, 10, 10, 10};
constexpr std::array<int, 5> kGambleLoserAccepts{10, 10, 6, 0, 0};

// Reconstructed write days, ten per GPA in {1, 3, 4.5}.
constexpr std::array<double, 3> kGpas{1.0, 3.0, 4.5};
constexpr std::array<std::array<int, 10>, 3> kProcrastinationH4{{
    {2, 3, 3, 4, 4, 4, 4, 4, 3, 4},
    {1, 1, 2, 2, 2, 3, 3, 3, 4, 2},
    {1, 1, 1, 1, 1, 1, 1, 2, 2, 3},
}};
constexpr std::array<std::array<int, 10>, 3> kProcrastinationH10{{
    {1, 5, 6, 7, 8, 9, 10, 10, 10, 10},
    {2, 4, 5, 5, 6, 6, 7, 8, 9, 10},
    {3, 4, 4, 5, 5, 5, 6, 6, 7, 8},
}};

DemonstrationRecord make_record(const GameState& state, const PersonaSpec& persona,
                                std::string raw, DemoSource source, int horizon = 4) {
  DemonstrationRecord r;
  r.persona = persona;
  r.state = state;
  r.state_index = il_state_index(state);
  const Prompt prompt = render_prompt(state, persona);
  r.system_prompt = prompt.system;
  r.user_prompt = prompt.user;
  r.action = parse_response(game_of(state), raw, horizon);
  r.raw_response = std::move(raw);
  r.meta.source = source;
  return r;
}

DemonstrationSet make_set(const GameState& prototype) {
  const IlSpace space = il_space(prototype);
  return DemonstrationSet(game_of(prototype), space.state_count, space.action_count);
}

DemonstrationSet ultimatum_fixtures(bool fair) {
  const PersonaSpec persona = fair ? PersonaSpec::fair() : PersonaSpec::human();
  const auto& table = fair ? kUltimatumFair : kUltimatumHuman;
  DemonstrationSet set = make_set(UltimatumState{});
  for (int x = 0; x <= 10; ++x) {
    for (std::size_t i = 0; i < 10; ++i) {
      const UltimatumState state{10, x};
      if (!fair && x == kCorrectedOffer && i == kCorrectedPosition) {
        auto r = make_record(state, persona, kCorrectedAnswer, DemoSource::FixtureCorrected);
        r.extra["original_raw_response"] = table[static_cast<std::size_t>(x)][i];
        set.add(std::move(r));
      } else {
        set.add(make_record(state, persona, table[static_cast<std::size_t>(x)][i], DemoSource::Fixture));
      }
    }
  }
  return set;
}

DemonstrationSet marshmallow_fixtures(WaitVariant wait, std::optional<int> only_age) {
  const auto& table = wait == WaitVariant::TwoHours ? kMarshmallowTwoHours : kMarshmallowFifteenMinutes;
  DemonstrationSet set = make_set(MarshmallowState{wait});
  for (int age = 2; age <= 5; ++age) {
    if (only_age && *only_age != age) continue;
    const auto& row = table[static_cast<std::size_t>(age - 2)];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (wait == WaitVariant::FifteenMinutes && age == kCorrectedAge && i == kCorrectedWaitPosition) {
        auto r = make_record(MarshmallowState{wait}, PersonaSpec::child(age), kCorrectedWaitAnswer,
                             DemoSource::FixtureCorrected);
        r.extra["original_raw_response"] = row[i];
        set.add(std::move(r));
      } else {
        set.add(make_record(MarshmallowState{wait}, PersonaSpec::child(age), row[i], DemoSource::Fixture));
      }
    }
  }
  return set;
}

DemonstrationSet gamble_fixtures(bool winners, bool losers) {
  const GambleSpec spec;
  DemonstrationSet set = make_set(GambleState{});
  auto add_role = [&](GambleRole role, const std::array<int, 5>& accepts) {
    for (std::size_t e = 0; e < spec.epsilons.size(); ++e) {
      for (int i = 0; i < 10; ++i) {
        const char* raw = i < accepts[e] ? "accept the second bet" : "reject the second bet";
        set.add(make_record(GambleState{role, spec.epsilons[e]}, PersonaSpec::average_human(), raw,
                            DemoSource::FixtureReconstructed));
      }
    }
  };
  if (winners) add_role(GambleRole::Winner, kGambleWinnerAccepts);
  if (losers) add_role(GambleRole::Loser, kGambleLoserAccepts);
  return set;
}

DemonstrationSet procrastination_fixtures(int horizon, std::optional<double> only_gpa) {
  const auto& table = horizon == 4 ? kProcrastinationH4 : kProcrastinationH10;
  const ProcrastinationState state{horizon};
  DemonstrationSet set = make_set(state);
  for (std::size_t g = 0; g < kGpas.size(); ++g) {
    if (only_gpa && *only_gpa != kGpas[g]) continue;
    for (int day : table[g]) {
      set.add(make_record(state, PersonaSpec::student(kGpas[g]), std::to_string(day) + " since the movie",
                          DemoSource::FixtureReconstructed, horizon));
    }
  }
  if (only_gpa && set.empty()) throw std::invalid_argument("no procrastination fixtures for that GPA");
  return set;
}

// Splits "base:suffix" into its two halves; the suffix is empty when absent.
std::pair<std::string, std::string> split_variant(const std::string& variant) {
  const auto colon = variant.find(':');
  if (colon == std::string::npos) return {variant, {}};
  return {variant.substr(0, colon), variant.substr(colon + 1)};
}

[[noreturn]] void unknown_variant(Game game, const std::string& variant) {
  throw std::invalid_argument("unknown " + to_string(game) + " fixture variant '" + variant + "'");
}

}  // namespace

std::vector<FixtureInfo> list_fixtures() {
  std::vector<FixtureInfo> out{
      {Game::Ultimatum, "human", 110, DemoSource::Fixture},
      {Game::Ultimatum, "fair", 110, DemoSource::Fixture},
  };
  for (const char* wait : {"2h", "15min"}) {
    out.push_back({Game::Marshmallow, wait, 40, DemoSource::Fixture});
    for (int age = 2; age <= 5; ++age) {
      out.push_back({Game::Marshmallow, std::string(wait) + ":age" + std::to_string(age), 10, DemoSource::Fixture});
    }
  }
  out.push_back({Game::Gamble, "all", 100, DemoSource::FixtureReconstructed});
  out.push_back({Game::Gamble, "winner", 50, DemoSource::FixtureReconstructed});
  out.push_back({Game::Gamble, "loser", 50, DemoSource::FixtureReconstructed});
  for (const char* h : {"h4", "h10"}) {
    out.push_back({Game::Procrastination, h, 30, DemoSource::FixtureReconstructed});
    for (const char* gpa : {"1", "3", "4.5"}) {
      out.push_back({Game::Procrastination, std::string(h) + ":gpa" + gpa, 10, DemoSource::FixtureReconstructed});
    }
  }
  return out;
}

DemonstrationSet load_fixtures(Game game, const std::string& variant) {
  const auto [base, suffix] = split_variant(variant);
  switch (game) {
    case Game::Ultimatum:
      if (variant == "human") return ultimatum_fixtures(false);
      if (variant == "fair") return ultimatum_fixtures(true);
      break;
    case Game::Marshmallow: {
      if (base != "2h" && base != "15min") break;
      std::optional<int> age;
      if (!suffix.empty()) {
        if (suffix.size() != 4 || suffix.rfind("age", 0) != 0 || suffix[3] < '2' || suffix[3] > '5') break;
        age = suffix[3] - '0';
      }
      return marshmallow_fixtures(wait_variant_from_string(base), age);
    }
    case Game::Gamble:
      if (variant == "all") return gamble_fixtures(true, true);
      if (variant == "winner") return gamble_fixtures(true, false);
      if (variant == "loser") return gamble_fixtures(false, true);
      break;
    case Game::Procrastination: {
      if (base != "h4" && base != "h10") break;
      std::optional<double> gpa;
      if (!suffix.empty()) {
        if (suffix == "gpa1") gpa = 1.0;
        else if (suffix == "gpa3") gpa = 3.0;
        else if (suffix == "gpa4.5") gpa = 4.5;
        else break;
      }
      return procrastination_fixtures(base == "h4" ? 4 : 10, gpa);
    }
  }
  unknown_variant(game, variant);
}

std::vector<ReasoningProbe> reasoning_probes() {
  const std::string child = "You are Janice a 5 years old child.";
  const std::string tail = ", Continue the following sentence ’Janice decides to’";
  return {
      {"bitter-melon-reward",
       {child, "Janice is offered to get one candy now, or to wait for 2 more hours to eventually get two bitter melons" + tail},
       "Janice decides to take the one candy now. While two bitter melons might be more, she doesn't really "
       "like bitter melons and she wants something sweet right now. She happily takes the candy and enjoys "
       "it immediately.",
       marshmallow::kTakeNow},
      {"two-year-wait",
       {child, "Janice is offered to get one candy now, or to wait for 2 more years to eventually get two candies" + tail},
       "Janice decides to take the one candy now because waiting for two years seemed like a very long time "
       "for a five-year-old.",
       marshmallow::kTakeNow},
      {"bitter-melon-both",
       {"You are Janice a 5 years old child who doesn't like bitter taste.",
        "Janice is offered to get one bitter melon now, or to wait for 2 more hours to eventually get two bitter melons" + tail},
       "Janice decides to wait for two more hours anyway, hoping that someone would want to trade her two "
       "bitter melons for something sweet.",
       marshmallow::kWait},
      {"two-month-wait",
       {child, "Janice is offered to get one candy now, or to wait for 2 more months to eventually get two candies" + tail},
       "Janice decides to patiently wait for two more months to eventually get two candies because she loves "
       "candies and getting two candies is better than one.",
       marshmallow::kWait},
  };
}

}  // namespace sublab
