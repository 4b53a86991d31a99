#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sublab/chat_client.hpp"
#include "sublab/demonstrations.hpp"
#include "sublab/experiment.hpp"

using namespace sublab;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 a target failed, 2 bad input or I/O failure.
constexpr int kTargetsFailed = 1;
constexpr int kBadInput = 2;

void print_verdicts(std::ostream& os, const json& summary) {
  for (const auto& v : summary.at("variants")) {
    os << v.at("label").get<std::string>() << ":";
    std::size_t failed_seeds = 0;
    for (const auto& s : v.at("per_seed")) failed_seeds += s.at("ok").get<bool>() ? 0 : 1;
    if (failed_seeds) os << " (" << failed_seeds << " seed(s) failed)";
    os << "\n";
    for (const auto& t : v.at("verdicts")) {
      os << "  " << (t.at("pass").get<bool>() ? "PASS" : "FAIL") << " " << t.at("name").get<std::string>() << " "
         << t.at("seeds_passed").get<std::size_t>() << "/" << t.at("seeds_total").get<std::size_t>() << "\n";
    }
    for (const auto& s : v.at("per_seed")) {
      if (!s.at("ok").get<bool>()) {
        os << "  seed " << s.at("seed").get<std::uint64_t>() << ": " << s.at("error").get<std::string>() << "\n";
      }
    }
  }
  for (const auto& c : summary.at("comparisons")) {
    os << (c.at("pass").get<bool>() ? "PASS" : "FAIL") << " " << c.at("name").get<std::string>() << " "
       << c.at("seeds_passed").get<std::size_t>() << "/" << c.at("seeds_total").get<std::size_t>() << "\n";
  }
  os << (summary.at("pass").get<bool>() ? "all targets passed" : "some targets failed") << "\n";
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  return ReportFormat::Both;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subrational agent experiments: imitation and RL on four behavioral games"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run an experiment config and write its report");
  std::string config_path;
  std::vector<std::uint64_t> seed_override;
  std::string out_dir;
  std::string format = "both";
  std::size_t max_parallel = 0;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed-override", seed_override, "Replace the config's seed list");
  run->add_option("--out", out_dir, "Replace the config's output directory");
  run->add_option("--format", format, "Summary format")->check(CLI::IsMember({"csv", "json", "both"}));
  run->add_option("--max-parallel", max_parallel, "Worker threads (0: all cores)");

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "Embedded demonstration fixtures");
  fixtures->require_subcommand(1);
  auto* fixtures_list = fixtures->add_subcommand("list", "List fixture variants");
  auto* fixtures_export = fixtures->add_subcommand("export", "Write a fixture variant as JSONL");
  std::string fx_game, fx_variant, fx_out;
  fixtures_export->add_option("--game", fx_game, "ultimatum | marshmallow | gamble | procrastination")->required();
  fixtures_export->add_option("--variant", fx_variant, "Fixture variant, see 'fixtures list'")->required();
  fixtures_export->add_option("--out", fx_out, "Output JSONL path (default: stdout)");

  // demos
  auto* demos = app.add_subcommand("demos", "Generate or validate demonstration files");
  demos->require_subcommand(1);
  auto* demos_generate = demos->add_subcommand("generate", "Query a chat-completions endpoint for demonstrations");
  auto* demos_validate = demos->add_subcommand("validate", "Check a JSONL demonstration file");
  std::string dg_game, dg_persona, dg_out;
  std::size_t dg_per_state = 10;
  int dg_total = 10, dg_horizon = 4;
  std::string dg_wait = "2h";
  ChatClientConfig endpoint;
  demos_generate->add_option("--game", dg_game, "Game")->required();
  demos_generate->add_option("--persona", dg_persona, "human | fair | ageN | average_human | gpaX");
  demos_generate->add_option("--out", dg_out, "Output JSONL path")->required();
  demos_generate->add_option("--per-state", dg_per_state, "Answers per state")->capture_default_str();
  demos_generate->add_option("--total", dg_total, "Ultimatum sum")->capture_default_str();
  demos_generate->add_option("--wait", dg_wait, "Marshmallow wait: 2h | 15min")->capture_default_str();
  demos_generate->add_option("--horizon", dg_horizon, "Procrastination days")->capture_default_str();
  demos_generate->add_option("--base-url", endpoint.base_url)->capture_default_str();
  demos_generate->add_option("--path", endpoint.path)->capture_default_str();
  demos_generate->add_option("--model", endpoint.model)->capture_default_str();
  demos_generate->add_option("--temperature", endpoint.temperature)->capture_default_str();
  demos_generate->add_option("--max-tokens", endpoint.max_tokens)->capture_default_str();
  demos_generate->add_option("--max-attempts", endpoint.max_attempts)->capture_default_str();
  demos_generate->add_option("--max-in-flight", endpoint.max_in_flight)->capture_default_str();
  demos_generate->add_option("--timeout", endpoint.timeout_seconds, "Seconds")->capture_default_str();
  demos_generate->add_option("--api-key-env", endpoint.api_key_env, "Variable holding the API key")
      ->capture_default_str();
  std::string dv_path;
  demos_validate->add_option("path", dv_path, "JSONL file")->required();

  // report
  auto* report = app.add_subcommand("report", "Print the verdicts of a written summary.json");
  std::string summary_path;
  report->add_option("summary", summary_path, "summary.json path")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig config = load_config(config_path);
      if (!seed_override.empty()) config.seeds = seed_override;
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (max_parallel) config.max_parallel = max_parallel;
      config.validate();
      const auto result = run_experiment(config);
      const auto written = emit_report(result, config.output_dir, parse_format(format));
      print_verdicts(std::cout, summary_json(result));
      std::cout << "wrote " << written.size() << " files under " << config.output_dir << "\n";
      return result.pass() ? 0 : kTargetsFailed;
    }

    if (*fixtures_list) {
      std::printf("%-16s %-22s %8s  %s\n", "game", "variant", "records", "source");
      for (const auto& f : list_fixtures()) {
        std::printf("%-16s %-22s %8zu  %s\n", to_string(f.game).c_str(), f.variant.c_str(), f.records,
                    to_string(f.source).c_str());
      }
      return 0;
    }
    if (*fixtures_export) {
      const auto set = load_fixtures(game_from_string(fx_game), fx_variant);
      if (fx_out.empty()) {
        std::cout << to_jsonl(set);
      } else {
        save_jsonl(set, fx_out);
        std::cerr << "wrote " << set.size() << " records to " << fx_out << "\n";
      }
      return 0;
    }

    if (*demos_generate) {
      const Game game = game_from_string(dg_game);
      if (dg_persona.empty() && game == Game::Gamble) dg_persona = "average_human";
      const PersonaSpec persona = persona_from_label(game, dg_persona);
      const auto states = imitation_states(game, dg_total, wait_variant_from_string(dg_wait), dg_horizon);
      const auto result = generate_demonstrations(endpoint, states, persona, dg_per_state);
      save_jsonl(result.set, dg_out);
      if (!result.quarantined.empty()) {
        const std::string qpath = dg_out + ".quarantine.jsonl";
        std::ofstream q(qpath);
        for (const auto& a : result.quarantined) {
          q << json{{"sequence", a.sequence}, {"attempt", a.attempt}, {"raw_response", a.raw_response},
                    {"reason", a.reason}}
                   .dump()
            << "\n";
        }
        std::cerr << result.quarantined.size() << " unparseable answers written to " << qpath << "\n";
      }
      for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
      std::cerr << "wrote " << result.set.size() << " records to " << dg_out << "\n";
      return result.errors.empty() ? 0 : kBadInput;
    }
    if (*demos_validate) {
      const auto set = from_jsonl(read_file(dv_path));
      if (!set.game()) {
        std::cout << dv_path << ": empty\n";
        return 0;
      }
      std::cout << dv_path << ": " << set.size() << " " << to_string(*set.game()) << " records over "
                << set.state_count() << " states x " << set.action_count() << " actions\n";
      std::map<std::string, std::size_t> personas;
      for (const auto& r : set.records()) ++personas[r.persona.label()];
      for (const auto& [label, n] : personas) std::cout << "  persona " << label << ": " << n << "\n";
      for (StateIndex s : set.covered_states()) {
        const auto acts = set.actions_for(s);
        std::vector<std::size_t> counts(set.action_count(), 0);
        for (auto a : acts) ++counts[a];
        std::cout << "  state " << s << ":";
        for (auto c : counts) std::cout << " " << c;
        std::cout << "\n";
      }
      return 0;
    }

    if (*report) {
      const json summary = json::parse(read_file(summary_path));
      print_verdicts(std::cout, summary);
      return summary.at("pass").get<bool>() ? 0 : kTargetsFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return 0;
}
