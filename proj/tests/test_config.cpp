#include <doctest.h>

#include <string>

#include <nlohmann/json.hpp>

#include "htc/config.hpp"
#include "htc/errors.hpp"
#include "support/tempdir.hpp"

using namespace htc;
using namespace htc::testing;
using nlohmann::json;

namespace {

json base_config() {
  return json{
      {"task", "task5"},
      {"datasets", {{"dev", "data/dev.csv"}}},
      {"providers",
       {{"main", {{"endpoint", "http://localhost:9/v1"}, {"token_env", "MAIN_TOKEN"}}}}},
      {"backends",
       {{"llm",
         {{"kind", "prompted"},
          {"provider", "main"},
          {"model", "demo-model"},
          {"template", "task5.direct"}}},
        {"replay", {{"kind", "file"}, {"path", "preds.csv"}, {"outputs", {0, 1}}}},
        {"sim",
         {{"kind", "mock"},
          {"confusion",
           {{"0", {{"0", 0.9}, {"1", 0.1}}}, {"1", {{"0", 0.2}, {"1", 0.8}}}}},
          {"seed", 7}}}}},
      {"pipelines", json::array({{{"name", "main"},
                                  {"variant", "direct"},
                                  {"members", {"llm"}}}})},
  };
}

std::string parse_error(const json& doc) {
  try {
    parse_config(doc);
    return "";
  } catch (const ConfigError& e) {
    return e.what();
  }
}

}  // namespace

TEST_CASE("a full config parses with defaults applied") {
  const ExperimentConfig cfg = parse_config(base_config());
  CHECK(cfg.task == TaskId::task5);
  CHECK(cfg.datasets.at(Split::dev).path == "data/dev.csv");
  CHECK(cfg.datasets.at(Split::dev).format == FileFormat::csv);
  CHECK(cfg.providers.at("main").endpoint == "http://localhost:9/v1");
  CHECK(cfg.providers.at("main").token_env == "MAIN_TOKEN");
  CHECK(cfg.backends.size() == 3);
  CHECK(cfg.backends.at("llm").kind == BackendConfig::Kind::prompted);
  CHECK(cfg.backends.at("llm").max_output_length == 4);
  CHECK(cfg.backends.at("llm").temperature == 0.0);
  CHECK(cfg.backends.at("replay").declared_outputs == std::vector<int>{0, 1});
  CHECK(cfg.backends.at("sim").mock.seed == 7);
  CHECK(cfg.pipelines.size() == 1);
  CHECK(cfg.pipelines[0].variant == PipelineVariant::direct);
  CHECK(cfg.evaluation.beta == 2.0);
  CHECK(cfg.evaluation.formats == std::vector<std::string>{"json", "md"});
  CHECK(cfg.parallelism == 1);
  CHECK(cfg.retry.max_attempts == 3);
  CHECK(cfg.failure_ceiling == 0.0);
  CHECK(cfg.abstention_label == 0);
  CHECK(cfg.output_dir == "runs");
  CHECK(cfg.cache_dir.empty());
  CHECK(cfg.label_space().labels() == std::vector<int>{0, 1});
}

TEST_CASE("top-level requirements are enforced by name") {
  json doc = base_config();
  doc.erase("task");
  CHECK(parse_error(doc).find("task is required") != std::string::npos);

  doc = base_config();
  doc.erase("datasets");
  CHECK(parse_error(doc).find("datasets is required") != std::string::npos);

  doc = base_config();
  doc["datasets"] = json::object();
  CHECK(parse_error(doc).find("at least one split") != std::string::npos);

  doc = base_config();
  doc.erase("backends");
  CHECK(parse_error(doc).find("backends is required") != std::string::npos);

  doc = base_config();
  doc["backends"] = json::object();
  CHECK(parse_error(doc).find("at least one backend") != std::string::npos);

  doc = base_config();
  doc.erase("pipelines");
  CHECK(parse_error(doc).find("pipelines is required") != std::string::npos);

  doc = base_config();
  doc["pipelines"] = json::array();
  CHECK(parse_error(doc).find("non-empty array") != std::string::npos);

  doc = base_config();
  doc["task"] = "task9";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("dataset entries take string shorthand or objects and infer tsv") {
  json doc = base_config();
  doc["datasets"]["train"] = "data/train.tsv";
  doc["datasets"]["test"] = {{"path", "data/test.txt"}, {"format", "tsv"}};
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.datasets.at(Split::train).format == FileFormat::tsv);
  CHECK(cfg.datasets.at(Split::test).format == FileFormat::tsv);
  CHECK(cfg.datasets.at(Split::dev).format == FileFormat::csv);

  doc["datasets"]["dev"] = {{"path", "x.csv"}, {"format", "xml"}};
  CHECK(parse_error(doc).find("must be csv or tsv") != std::string::npos);
}

TEST_CASE("provider fields are validated") {
  json doc = base_config();
  doc["providers"]["main"].erase("token_env");
  CHECK(parse_error(doc).find("providers.main.token_env is required") != std::string::npos);

  doc = base_config();
  doc["providers"]["main"]["max_in_flight"] = 0;
  CHECK(parse_error(doc).find("max_in_flight") != std::string::npos);

  doc = base_config();
  doc["providers"]["main"]["requests_per_minute"] = -1;
  CHECK(parse_error(doc).find("requests_per_minute") != std::string::npos);
}

TEST_CASE("backend cross-references must resolve") {
  json doc = base_config();
  doc["backends"]["llm"]["provider"] = "missing";
  CHECK(parse_error(doc).find(
            "backends.llm.provider references undefined provider 'missing'") !=
        std::string::npos);

  doc = base_config();
  doc["backends"]["llm"]["template"] = "nope";
  CHECK(parse_error(doc).find(
            "backends.llm.template references unknown template 'nope'") !=
        std::string::npos);

  doc = base_config();
  doc["backends"]["llm"]["kind"] = "magic";
  CHECK(parse_error(doc).find("must be prompted, file, or mock") != std::string::npos);

  doc = base_config();
  doc["backends"]["llm"].erase("model");
  CHECK(parse_error(doc).find("backends.llm.model is required") != std::string::npos);

  doc = base_config();
  doc["backends"]["llm"]["max_output_length"] = 0;
  CHECK(parse_error(doc).find("max_output_length") != std::string::npos);
}

TEST_CASE("custom templates layer over the built-in registry") {
  json doc = base_config();
  doc["templates"] = {{"task5.direct",
                       {{"instruction", "Reply 1 for relevant posts, 0 otherwise."},
                        {"outputs", {{"0", 0}, {"1", 1}}}}},
                      {"extra.gate",
                       {{"instruction", "Answer 0 or 1."},
                        {"outputs", {{"0", 0}, {"1", 1}}}}}};
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.resolve_template("task5.direct").instruction() ==
        "Reply 1 for relevant posts, 0 otherwise.");
  CHECK(cfg.resolve_template("extra.gate").output_labels() == std::set<int>{0, 1});
  // untouched built-ins still resolve
  CHECK(cfg.resolve_template("task3.direct").output_labels() == std::set<int>{0, 1, 2, 3});
  CHECK_THROWS_AS(cfg.resolve_template("absent"), ConfigError);

  doc["templates"]["bad"] = {{"instruction", "x"}, {"outputs", {{"yes", 1}}}};
  CHECK(parse_error(doc).find("must be a single character") != std::string::npos);

  doc["templates"].erase("bad");
  doc["templates"]["empty"] = {{"instruction", "x"}, {"outputs", json::object()}};
  CHECK(parse_error(doc).find("is invalid") != std::string::npos);
}

TEST_CASE("mock confusion rows are validated") {
  json doc = base_config();
  doc["backends"]["sim"]["confusion"]["1"] = {{"0", 0.5}, {"1", 0.4}};
  CHECK(parse_error(doc).find("backends.sim.confusion is invalid") != std::string::npos);

  doc = base_config();
  doc["backends"]["sim"]["confusion"]["x"] = {{"0", 1.0}};
  CHECK(parse_error(doc).find("key 'x' must be an integer label") != std::string::npos);

  doc = base_config();
  doc["backends"]["sim"]["confusion"]["0"]["1.5"] = 0.1;
  CHECK(parse_error(doc).find("key '1.5' must be an integer label") != std::string::npos);
}

TEST_CASE("pipeline references and names are checked") {
  json doc = base_config();
  doc["pipelines"][0]["members"] = {"llm", "ghost"};
  CHECK(parse_error(doc).find(
            "pipelines[0].members[1] references undefined backend 'ghost'") !=
        std::string::npos);

  doc = base_config();
  doc["pipelines"][0]["variant"] = "cascade";
  const std::string what = parse_error(doc);
  CHECK(what.find("pipelines[0].variant") != std::string::npos);
  CHECK(what.find("direct, two_stage, and_rule, or_rule, majority_vote") !=
        std::string::npos);

  doc = base_config();
  doc["pipelines"].push_back(
      {{"name", "main"}, {"variant", "direct"}, {"members", {"sim"}}});
  CHECK(parse_error(doc).find("pipelines[1].name duplicates pipeline 'main'") !=
        std::string::npos);

  doc = base_config();
  doc["pipelines"][0] = {{"name", "vote"},
                         {"variant", "majority_vote"},
                         {"members", {"llm", "sim"}},
                         {"tie_break", {"replay", "llm"}}};
  CHECK(parse_error(doc).find(
            "pipelines[0].tie_break[0] references 'replay', which is not a member") !=
        std::string::npos);

  doc = base_config();
  doc["pipelines"][0]["router"] = {{"facebook", "llm"}};
  CHECK(parse_error(doc).find("unknown platform 'facebook'") != std::string::npos);

  doc = base_config();
  doc["pipelines"][0]["router"] = {{"twitter", "sim"}};
  CHECK(parse_error(doc).find(
            "pipelines[0].router.twitter references 'sim', which is not a member") !=
        std::string::npos);

  doc = base_config();
  doc["pipelines"][0]["members"] = json::array();
  CHECK(parse_error(doc).find("non-empty array of backend names") != std::string::npos);
}

TEST_CASE("evaluation and runtime knobs are range-checked") {
  json doc = base_config();
  doc["evaluation"] = {{"beta", 0.0}};
  CHECK(parse_error(doc).find("evaluation.beta must be positive") != std::string::npos);

  doc = base_config();
  doc["evaluation"] = {{"formats", {"json", "xml"}}};
  CHECK(parse_error(doc).find("only json or md") != std::string::npos);

  doc = base_config();
  doc["evaluation"] = {{"beta", 1.0}, {"formats", {"md"}}};
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.evaluation.beta == 1.0);
  CHECK(cfg.evaluation.formats == std::vector<std::string>{"md"});

  doc = base_config();
  doc["parallelism"] = 0;
  CHECK(parse_error(doc).find("parallelism must be >= 1") != std::string::npos);

  doc = base_config();
  doc["retry"] = {{"max_attempts", 0}};
  CHECK(parse_error(doc).find("retry.max_attempts") != std::string::npos);

  doc = base_config();
  doc["retry"] = {{"max_attempts", 5}, {"backoff_ms", 10}};
  CHECK(parse_config(doc).retry.max_attempts == 5);

  doc = base_config();
  doc["failure_ceiling"] = 1.5;
  CHECK(parse_error(doc).find("within [0, 1]") != std::string::npos);

  doc = base_config();
  doc["abstention_label"] = 3;
  CHECK(parse_error(doc).find("outside the task's label space") != std::string::npos);

  doc = base_config();
  doc["task"] = "task3";
  doc["backends"]["llm"]["template"] = "task3.direct";
  doc["abstention_label"] = 3;
  CHECK(parse_config(doc).abstention_label == 3);

  doc = base_config();
  doc["output_dir"] = "";
  CHECK(parse_error(doc).find("output_dir") != std::string::npos);
}

TEST_CASE("load_config wraps file and JSON failures") {
  TempDir tmp("cfg");

  try {
    load_config(tmp.path() / "absent.json");
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
  }

  const auto bad = tmp.path() / "bad.json";
  write_file(bad, "{ not json");
  try {
    load_config(bad);
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
  }

  json doc = base_config();
  doc["parallelism"] = "plenty";
  const auto typed = tmp.path() / "typed.json";
  write_file(typed, doc.dump(2));
  try {
    load_config(typed);
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("malformed field") != std::string::npos);
  }

  const auto good = tmp.path() / "good.json";
  write_file(good, base_config().dump(2));
  const ExperimentConfig cfg = load_config(good);
  CHECK(cfg.task == TaskId::task5);
  CHECK(cfg.pipelines.size() == 1);
}
