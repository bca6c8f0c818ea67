#include <doctest.h>

#include <random>

#include "htc/backends.hpp"
#include "htc/cache.hpp"
#include "htc/errors.hpp"
#include "htc/prompts.hpp"
#include "support/doubles.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using namespace htc;
using namespace htc::testing;

namespace {

PromptTemplate binary_template() {
  return PromptTemplate("test.binary", "Decide.", {{'0', 0}, {'1', 1}});
}

TextSample sample(const std::string& id, int gold = 0) {
  TextSample s;
  s.id = id;
  s.text = "text of " + id;
  s.gold_label = gold;
  return s;
}

}  // namespace

TEST_CASE("prediction set orders, indexes and round-trips CSV") {
  TempDir tmp("backends");
  PredictionSet set("unit");
  set.add({"a", 1, "unit", std::nullopt});
  set.add({"b", 0, "unit", std::nullopt});
  CHECK_THROWS_AS(set.add({"a", 0, "unit", std::nullopt}), DataError);
  REQUIRE(set.find("b") != nullptr);
  CHECK(set.find("b")->label == 0);
  CHECK(set.find("zz") == nullptr);
  CHECK(set.to_csv() == "id,label\na,1\nb,0\n");

  const auto path = tmp.file("preds.csv");
  set.write_csv(path.string());
  const PredictionSet back = PredictionSet::read_csv(path.string(), "replayed");
  CHECK(back.producer() == "replayed");
  REQUIRE(back.size() == 2);
  CHECK(back.ordered()[0].sample_id == "a");
  CHECK(back.ordered()[0].label == 1);
}

TEST_CASE("prediction file backend replays rows") {
  TempDir tmp("backends");
  const auto path = tmp.file("saved.csv");
  write_file(path, "id,label\nt1,1\nt2,0\n");
  PredictionFileBackend backend("saved", path.string());
  CHECK(backend.predict(sample("t1")).label == 1);
  CHECK(backend.predict(sample("t2")).label == 0);
  CHECK(backend.predict(sample("t1")).provenance == "saved");
  CHECK(backend.output_labels() == std::set<int>{0, 1});

  try {
    backend.predict(sample("unknown"));
    FAIL("expected error");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::missing_prediction);
    CHECK(std::string(e.what()).find("unknown") != std::string::npos);
  }
}

TEST_CASE("prediction file backend validates declared outputs") {
  TempDir tmp("backends");
  const auto path = tmp.file("saved.csv");
  write_file(path, "id,label\nt1,2\n");
  CHECK_THROWS_AS(PredictionFileBackend("saved", path.string(), std::set<int>{0, 1}),
                  ConfigError);
  const PredictionFileBackend ok("saved", path.string(), std::set<int>{0, 1, 2, 3});
  CHECK(ok.output_labels() == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("mock backend with identity confusion equals gold") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 1.0}}}, {1, {{1, 1.0}}}, {2, {{2, 1.0}}}, {3, {{3, 1.0}}}};
  spec.seed = 9;
  MockBackend backend("identity", spec);
  for (int gold = 0; gold < 4; ++gold) {
    for (int i = 0; i < 25; ++i) {
      CHECK(backend.predict(sample("id" + std::to_string(i), gold)).label == gold);
    }
  }
}

TEST_CASE("mock backend validation") {
  MockSpec bad_sum;
  bad_sum.confusion = {{0, {{0, 0.6}, {1, 0.3}}}};
  CHECK_THROWS_AS(bad_sum.validate(), ConfigError);

  MockSpec negative;
  negative.confusion = {{0, {{0, 1.2}, {1, -0.2}}}};
  CHECK_THROWS_AS(negative.validate(), ConfigError);

  MockSpec ok;
  ok.confusion = {{0, {{0, 0.7}, {1, 0.3}}}};
  CHECK_NOTHROW(ok.validate());

  MockBackend backend("m", ok);
  CHECK_THROWS_AS(backend.predict(sample("s", 1)), ConfigError);  // no row for gold 1
  TextSample unlabeled;
  unlabeled.id = "u";
  unlabeled.text = "t";
  CHECK_THROWS_AS(backend.predict(unlabeled), DataError);
}

TEST_CASE("mock backend hits its confusion rates within Monte-Carlo tolerance") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 0.9}, {1, 0.1}}}, {1, {{0, 0.2}, {1, 0.8}}}};
  spec.seed = 20240819;
  MockBackend backend("mc", spec);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    if (backend.predict(sample("mc" + std::to_string(i), 1)).label == 1) ++hits;
  }
  const double recall = static_cast<double>(hits) / n;
  CHECK(recall == doctest::Approx(0.8).epsilon(0.025));
}

TEST_CASE("mock draws depend only on (seed, id), not call order") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 0.5}, {1, 0.5}}}, {1, {{0, 0.5}, {1, 0.5}}}};
  spec.seed = 4;
  MockBackend a("a", spec);
  MockBackend b("b", spec);

  std::vector<TextSample> samples;
  for (int i = 0; i < 200; ++i) samples.push_back(sample("o" + std::to_string(i), i % 2));

  std::vector<int> forward;
  for (const auto& s : samples) forward.push_back(a.predict(s).label);
  std::vector<int> backward(samples.size());
  for (std::size_t i = samples.size(); i > 0; --i) {
    backward[i - 1] = b.predict(samples[i - 1]).label;
  }
  CHECK(forward == backward);

  MockSpec other = spec;
  other.seed = 5;
  MockBackend c("c", other);
  std::vector<int> reseeded;
  for (const auto& s : samples) reseeded.push_back(c.predict(s).label);
  CHECK(forward != reseeded);
}

TEST_CASE("prompted backend parses, caches and counts") {
  auto transport = ScriptedTransport::constant("1");
  auto cache = std::make_shared<ResponseCache>();
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache);

  const Prediction first = backend.predict(sample("p1"));
  CHECK(first.label == 1);
  CHECK(first.provenance == "llm");
  REQUIRE(first.raw_response.has_value());
  CHECK(*first.raw_response == "1");
  CHECK(transport->calls() == 1);

  const Prediction again = backend.predict(sample("p1"));
  CHECK(again.label == 1);
  CHECK(transport->calls() == 1);  // served from cache

  const BackendStats stats = backend.stats();
  CHECK(stats.remote_calls == 1);
  CHECK(stats.cache_hits == 1);
}

TEST_CASE("prompted backend keys the cache by the full request") {
  auto transport = std::make_shared<ScriptedTransport>(
      [](const CompletionRequest& r) { return r.input_text.size() % 2 == 0 ? "0" : "1"; });
  auto cache = std::make_shared<ResponseCache>();
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache);
  CHECK(backend.predict(sample("ab")).label == 0);   // "text of ab" -> 10 chars -> even
  CHECK(backend.predict(sample("abc")).label == 1);  // differs -> separate key
  CHECK(transport->calls() == 2);
}

TEST_CASE("prompted backend retries remote failures then succeeds") {
  auto transport = ScriptedTransport::constant("0");
  transport->fail_next(2);
  auto cache = std::make_shared<ResponseCache>();
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                          RetryPolicy{3, 0});
  const Prediction p = backend.predict(sample("r1"));
  CHECK(p.label == 0);
  CHECK(p.provenance == "llm");
  CHECK(transport->calls() == 3);
}

TEST_CASE("prompted backend abstains after exhausted retries") {
  SUBCASE("persistent remote failure") {
    auto transport = ScriptedTransport::constant("0");
    transport->fail_next(1000);
    auto cache = std::make_shared<ResponseCache>();
    PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                            RetryPolicy{3, 0});
    const Prediction p = backend.predict(sample("r2"));
    CHECK(p.label == 0);  // majority-class abstention
    CHECK(p.provenance.find("[abstained:") != std::string::npos);
    CHECK(transport->calls() == 3);  // exactly max_attempts
  }
  SUBCASE("persistently malformed response") {
    auto transport = ScriptedTransport::constant("I cannot answer that");
    auto cache = std::make_shared<ResponseCache>();
    PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                            RetryPolicy{3, 0});
    const Prediction p = backend.predict(sample("r3"));
    CHECK(p.label == 0);
    CHECK(p.provenance.find("[abstained:") != std::string::npos);
    CHECK(transport->calls() == 3);
  }
}

TEST_CASE("cached malformed responses abstain without another remote call") {
  auto transport = ScriptedTransport::constant("garbage response");
  auto cache = std::make_shared<ResponseCache>();
  {
    PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                            RetryPolicy{2, 0});
    CHECK(backend.predict(sample("c1")).label == 0);
    CHECK(transport->calls() == 2);
  }
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                          RetryPolicy{2, 0});
  const Prediction p = backend.predict(sample("c1"));
  CHECK(p.label == 0);
  CHECK(p.provenance.find("[abstained:") != std::string::npos);
  CHECK(transport->calls() == 2);  // no new attempts
}

TEST_CASE("prompted backend stays within its declared labels") {
  // Adversarial transport cycling through junk and valid outputs.
  const std::vector<std::string> responses = {"1", "0", "'1'", "\n0\n", "junk", "2",
                                              "\"1\"", "", "0 or 1", "1"};
  auto counter = std::make_shared<std::atomic<std::size_t>>(0);
  auto transport = std::make_shared<ScriptedTransport>(
      [counter, responses](const CompletionRequest&) {
        return responses[counter->fetch_add(1) % responses.size()];
      });
  auto cache = std::make_shared<ResponseCache>();
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache,
                          RetryPolicy{1, 0});
  const std::set<int>& declared = backend.output_labels();
  CHECK(declared == std::set<int>{0, 1});
  for (int i = 0; i < 100; ++i) {
    const Prediction p = backend.predict(sample("adv" + std::to_string(i)));
    CAPTURE(i);
    // abstention label 0 is inside the declared range for binary templates
    CHECK(declared.count(p.label) == 1);
  }
}

TEST_CASE("predict_batch is order-stable and parallelism-invariant") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 0.7}, {1, 0.3}}}, {1, {{0, 0.15}, {1, 0.85}}}};
  spec.seed = 77;
  MockBackend backend("mock", spec);

  std::vector<int> labels;
  for (int i = 0; i < 500; ++i) labels.push_back(i % 5 == 0 ? 1 : 0);
  const LabeledDataset ds = synth_dataset(TaskId::task5, labels);

  const PredictionSet seq = predict_batch(backend, ds, {1, 0.0, 0});
  const PredictionSet par = predict_batch(backend, ds, {8, 0.0, 0});
  REQUIRE(seq.size() == ds.size());
  REQUIRE(par.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(seq.ordered()[i].sample_id == ds.samples[i].id);  // dataset order
    CHECK(seq.ordered()[i].sample_id == par.ordered()[i].sample_id);
    CHECK(seq.ordered()[i].label == par.ordered()[i].label);
  }
}

TEST_CASE("predict_batch on an empty dataset is empty") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 1.0}}}};
  MockBackend backend("mock", spec);
  const LabeledDataset ds = synth_dataset(TaskId::task5, {});
  CHECK(predict_batch(backend, ds).size() == 0);
}

TEST_CASE("a cached batch repeats with zero remote calls") {
  auto transport = ScriptedTransport::constant("1");
  auto cache = std::make_shared<ResponseCache>();
  std::vector<int> labels(100, 0);
  const LabeledDataset ds = synth_dataset(TaskId::task5, labels);
  {
    PromptedBackend backend("llm", binary_template(), "model-x", transport, cache);
    CHECK(predict_batch(backend, ds, {4, 0.0, 0}).size() == 100);
    CHECK(backend.stats().remote_calls == 100);
  }
  PromptedBackend backend("llm", binary_template(), "model-x", transport, cache);
  const PredictionSet second = predict_batch(backend, ds, {4, 0.0, 0});
  CHECK(second.size() == 100);
  CHECK(backend.stats().remote_calls == 0);
  CHECK(backend.stats().cache_hits == 100);
  CHECK(transport->calls() == 100);  // unchanged
}

TEST_CASE("predict_batch failure ceiling") {
  TempDir tmp("backends");
  const auto path = tmp.file("partial.csv");
  // covers s1..s8 but not s9, s10
  std::string csv = "id,label\n";
  for (int i = 1; i <= 8; ++i) csv += "s" + std::to_string(i) + ",1\n";
  write_file(path, csv);
  PredictionFileBackend backend("partial", path.string());
  const LabeledDataset ds = synth_dataset(TaskId::task5, std::vector<int>(10, 1));

  SUBCASE("default ceiling aborts on any failure") {
    try {
      predict_batch(backend, ds, {2, 0.0, 0});
      FAIL("expected error");
    } catch (const BackendError& e) {
      CHECK(e.code() == ErrorCode::batch_failed);
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
  SUBCASE("tolerated failures fall back to the abstention label") {
    const PredictionSet set = predict_batch(backend, ds, {2, 0.25, 0});
    REQUIRE(set.size() == 10);
    CHECK(set.find("s9")->label == 0);
    CHECK(set.find("s9")->provenance.find("[failed:") != std::string::npos);
    CHECK(set.find("s10")->label == 0);
    CHECK(set.find("s1")->label == 1);
  }
}

TEST_CASE("predict_batch rejects zero parallelism") {
  MockSpec spec;
  spec.confusion = {{0, {{0, 1.0}}}};
  MockBackend backend("mock", spec);
  const LabeledDataset ds = synth_dataset(TaskId::task5, {0});
  CHECK_THROWS_AS(predict_batch(backend, ds, {0, 0.0, 0}), ConfigError);
}
