#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "sublab/experiment.hpp"

using namespace sublab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sublab_experiment_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json base(const std::string& experiment, json variants, json seeds = json::array({0, 1})) {
  return {{"experiment", experiment}, {"variants", std::move(variants)}, {"seeds", std::move(seeds)}};
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("variant shorthands and labels") {
    CHECK(variant_from_json("rational").label() == "rational");
    CHECK(variant_from_json("human-il").label() == "human-il");
    CHECK(variant_from_json("fair-il").persona == "fair");
    CHECK(variant_from_json("il").kind == VariantKind::Imitation);
    CHECK(variant_from_json(json{{"kind", "myopic"}, {"gamma", 0.3}}).label() == "myopic-g0.3");
    CHECK(variant_from_json(json{{"kind", "qh"}, {"beta", 0.4}, {"agent", "naive"}}).label() == "qh-naive-b0.4-d1");
    CHECK(variant_from_json(json{{"kind", "il"}, {"persona", "age5"}}).label() == "il-age5");
    CHECK_THROWS_AS(variant_from_json("myopic"), std::invalid_argument);
    CHECK_THROWS_AS(variant_from_json("greedy"), std::invalid_argument);
    CHECK_THROWS_AS(variant_from_json(json{{"kind", "myopic"}, {"gamma", 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(variant_from_json(json{{"kind", "qh"}, {"beta", 0.4}, {"agent", "clever"}}), std::invalid_argument);
  }

  TEST_CASE("config validation") {
    CHECK_NOTHROW(config_from_json(base("ultimatum", {"rational", "human-il"})));
    CHECK_THROWS_AS(config_from_json(base("ultimatum", json::array())), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(base("ultimatum", {"rational"}, json::array())), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(base("ultimatum", {"rational", "rational"})), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(base("ultimatum", {"prospect"})), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(base("marshmallow", {json{{"kind", "il"}, {"persona", "age9"}}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(base("gamble", {json{{"kind", "il"}, {"persona", "age3"}}})),
                    std::invalid_argument);
    auto doc = base("marshmallow", {"rational"});
    doc["colour"] = "blue";
    CHECK_THROWS_AS(config_from_json(doc), std::invalid_argument);
    doc = base("marshmallow", {"rational"});
    doc["hyperparameters"] = {{"q_learning", {{"episodes", 0}}}};
    CHECK_THROWS_AS(config_from_json(doc), std::invalid_argument);
    doc = base("procrastination", {json{{"kind", "il"}, {"persona", "gpa3"}}});
    doc["game"] = {{"horizon", 7}};
    CHECK_THROWS_AS(config_from_json(doc), std::invalid_argument);
    doc = base("gamble", {"il"});
    doc["demonstrations"] = {{"source", "jsonl"}};
    CHECK_THROWS(config_from_json(doc));
  }

  TEST_CASE("config JSON round-trip") {
    auto doc = base("procrastination", {"rational", json{{"kind", "qh"}, {"beta", 0.4}, {"delta", 0.9}},
                                        json{{"kind", "il"}, {"persona", "gpa4.5"}}});
    doc["game"] = {{"horizon", 10}};
    doc["hyperparameters"] = {{"q_learning", {{"learning_rate", 3e-4}}}, {"imitation", {{"kernel", "gaussian"}}}};
    doc["output_dir"] = "somewhere";
    const auto config = config_from_json(doc);
    CHECK(config.procrastination_horizon == 10);
    CHECK(config.hyper.q_learning.learning_rate == 3e-4);
    CHECK(config.hyper.imitation.density.kernel == Kernel::Gaussian);
    const auto again = config_to_json(config_from_json(config_to_json(config)));
    CHECK(again == config_to_json(config));
  }

  TEST_CASE("live endpoint settings never serialize the key") {
    auto doc = base("gamble", {"il"});
    doc["demonstrations"] = {{"source", "live"}, {"per_state", 3}, {"endpoint", {{"model", "m"}}}};
    const auto config = config_from_json(doc);
    CHECK(config.demos.kind == DemoSourceKind::Live);
    CHECK(config.demos.endpoint.model == "m");
    const auto out = config_to_json(config).dump();
    CHECK(out.find("api_key\"") == std::string::npos);
    CHECK(out.find("api_key_env") != std::string::npos);
  }

  TEST_CASE("target semantics") {
    Target t;
    t.metric = "m";
    t.op = TargetOp::Ge;
    t.value = 8;
    CHECK(t.satisfied_by(8));
    CHECK_FALSE(t.satisfied_by(7.9));
    t.op = TargetOp::Le;
    CHECK(t.satisfied_by(8));
    CHECK_FALSE(t.satisfied_by(8.1));
    t.op = TargetOp::Within;
    t.tolerance = 0.1;
    CHECK(t.satisfied_by(8.05));
    CHECK_FALSE(t.satisfied_by(8.2));
    t.op = TargetOp::OneOf;
    t.options = {7, 8};
    t.tolerance = 0;
    CHECK(t.satisfied_by(7));
    CHECK_FALSE(t.satisfied_by(6));
    CHECK_FALSE(t.satisfied_by(std::nan("")));
    const auto back = target_from_json(target_to_json(t));
    CHECK(back.options == t.options);
    CHECK(back.op == TargetOp::OneOf);
    CHECK_THROWS_AS(target_from_json(json{{"metric", "m"}, {"op", "gt"}, {"value", 1}}), std::invalid_argument);
  }

  TEST_CASE("marshmallow run: every variant once, verdicts, decisions and byte-identical output") {
    auto doc = base("marshmallow", {"rational", json{{"kind", "myopic"}, {"gamma", 0.3}},
                                    json{{"kind", "il"}, {"persona", "age5"}}});
    const auto config = config_from_json(doc);
    const auto report = run_experiment(config);
    REQUIRE(report.variants.size() == 3);
    CHECK(report.find("rational") != nullptr);
    CHECK(report.find("myopic-g0.3") != nullptr);
    CHECK(report.find("il-age5") != nullptr);
    CHECK(report.pass());
    CHECK(*report.find("rational")->seeds[0].metric("wait_probability") == 1.0);
    CHECK(*report.find("myopic-g0.3")->seeds[0].metric("wait_probability") == 0.0);
    CHECK(*report.find("il-age5")->seeds[1].metric("wait_probability") >= 0.95);

    const auto summary = summary_json(report);
    for (const auto& v : summary.at("variants")) {
      CHECK(v.at("seeds") == json::array({0, 1}));
      CHECK(v.at("per_seed").size() == 2);
      CHECK(v.at("per_seed").at(0).contains("decisions"));
      CHECK_FALSE(v.at("verdicts").empty());
    }

    const auto a = scratch("a"), b = scratch("b");
    const auto files_a = emit_report(report, a.string());
    emit_report(run_experiment(config), b.string());
    REQUIRE_FALSE(files_a.empty());
    for (const auto& f : files_a) {
      const auto rel = fs::relative(f, a);
      CAPTURE(rel.string());
      CHECK(slurp(a / rel) == slurp(b / rel));
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("CSV and JSON summaries carry identical numbers") {
    const auto config = config_from_json(base("gamble", {"il"}, json::array({3})));
    const auto report = run_experiment(config);
    const auto dir = scratch("formats");
    emit_report(report, dir.string());
    const auto summary = json::parse(slurp(dir / "summary.json"));
    const auto& metrics = summary.at("variants").at(0).at("per_seed").at(0).at("metrics");
    std::istringstream csv(slurp(dir / "summary.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "variant,seed,metric,value");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      REQUIRE(cells.size() == 4);
      CHECK(std::stod(cells[3]) == metrics.at(cells[2]).get<double>());
      ++rows;
    }
    CHECK(rows == metrics.size());
    fs::remove_all(dir);
  }

  TEST_CASE("single-variant JSON report writes one curve CSV and one summary") {
    const auto config = config_from_json(base("marshmallow", {json{{"kind", "il"}, {"persona", "age2"}}}, {0}));
    const auto dir = scratch("single");
    const auto files = emit_report(run_experiment(config), dir.string(), ReportFormat::Json);
    std::map<std::string, int> by_ext;
    for (const auto& f : files) ++by_ext[fs::path(f).extension().string()];
    CHECK(by_ext[".csv"] == 1);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK_FALSE(fs::exists(dir / "summary.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("a diverging variant fails alone") {
    auto doc = base("procrastination",
                    {json{{"kind", "rational"}, {"hyperparameters", {{"q_learning", {{"learning_rate", 1.0}}}}}},
                     json{{"kind", "qh"}, {"beta", 0.4}}},
                    {0});
    doc["game"] = {{"horizon", 10}};
    const auto report = run_experiment(config_from_json(doc));
    const auto& rational = *report.find("rational");
    CHECK_FALSE(rational.seeds[0].ok);
    CHECK(rational.seeds[0].error.rfind("diverged", 0) == 0);
    CHECK_FALSE(rational.pass());
    const auto& qh = *report.find("qh-sophisticated-b0.4-d1");
    CHECK(qh.seeds[0].ok);
    CHECK(*qh.seeds[0].metric("write_day") ==
          qh_write_day(ProcrastinationSpec::ten_day(), {0.4, 1.0}, PlannerKind::Sophisticated).decision_day);
    CHECK(qh.pass());
  }

  TEST_CASE("custom targets and required fractions") {
    auto doc = base("marshmallow",
                    {json{{"kind", "myopic"},
                          {"gamma", 0.3},
                          {"targets",
                           {{{"name", "impossible"}, {"metric", "wait_probability"}, {"op", "eq"}, {"value", 1}},
                            {{"name", "lenient"},
                             {"metric", "wait_probability"},
                             {"op", "eq"},
                             {"value", 1},
                             {"required_fraction", 0}}}}}},
                    {0, 1, 2});
    const auto report = run_experiment(config_from_json(doc));
    const auto& v = report.variants.at(0);
    REQUIRE(v.verdicts.size() == 2);
    CHECK_FALSE(v.verdicts[0].pass);
    CHECK(v.verdicts[0].seeds_total == 3);
    CHECK(v.verdicts[1].pass);
  }

  TEST_CASE("JSONL demonstration source matches the embedded fixture") {
    const auto dir = scratch("jsonl");
    fs::create_directories(dir);
    const auto path = (dir / "gamble.jsonl").string();
    save_jsonl(load_fixtures(Game::Gamble, "all"), path);
    auto doc = base("gamble", {"il"}, {2});
    const auto from_fixture = run_experiment(config_from_json(doc));
    doc["demonstrations"] = {{"source", "jsonl"}, {"path", path}};
    const auto from_file = run_experiment(config_from_json(doc));
    CHECK(from_file.variants[0].seeds[0].metrics == from_fixture.variants[0].seeds[0].metrics);

    doc["demonstrations"] = {{"source", "jsonl"}, {"path", (dir / "missing.jsonl").string()}};
    const auto missing = run_experiment(config_from_json(doc));
    CHECK_FALSE(missing.variants[0].seeds[0].ok);
    CHECK(missing.variants[0].seeds[0].error.find("demonstrations unavailable") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("unwritable output directory is surfaced") {
    const auto dir = scratch("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    const auto config = config_from_json(base("procrastination", {json{{"kind", "qh"}, {"beta", 0.4}}}, {0}));
    CHECK_THROWS_AS(emit_report(run_experiment(config), (dir / "file" / "out").string()), std::runtime_error);
    fs::remove_all(dir);
  }

  TEST_CASE("imitation_states and persona labels") {
    CHECK(imitation_states(Game::Ultimatum).size() == 11);
    CHECK(imitation_states(Game::Gamble).size() == 10);
    CHECK(imitation_states(Game::Procrastination, 10, WaitVariant::TwoHours, 10).size() == 1);
    CHECK(persona_from_label(Game::Marshmallow, "age3") == PersonaSpec::child(3));
    CHECK(persona_from_label(Game::Procrastination, "gpa4.5") == PersonaSpec::student(4.5));
    CHECK_THROWS_AS(persona_from_label(Game::Ultimatum, "age3"), std::invalid_argument);
    CHECK_THROWS_AS(persona_from_label(Game::Procrastination, "gpa4.5x"), std::invalid_argument);
  }
}
