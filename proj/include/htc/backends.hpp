#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "htc/cache.hpp"
#include "htc/client.hpp"
#include "htc/corpus.hpp"
#include "htc/prompts.hpp"

namespace htc {

// One predicted label, with provenance naming the backend (and, inside a
// composite pipeline, the stage or sub-condition decisions).
struct Prediction {
  std::string sample_id;
  int label = 0;
  std::string provenance;
  std::optional<std::string> raw_response;
};

// Per-sample predictions in dataset order, exportable to `id,label` CSV.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::string producer) : producer_(std::move(producer)) {}

  const std::string& producer() const { return producer_; }
  void set_producer(std::string name) { producer_ = std::move(name); }

  void add(Prediction p);
  const std::vector<Prediction>& ordered() const { return ordered_; }
  const Prediction* find(const std::string& sample_id) const;
  std::size_t size() const { return ordered_.size(); }

  std::string to_csv() const;  // header `id,label`, rows in insertion order
  void write_csv(const std::string& path) const;
  static PredictionSet read_csv(const std::string& path, std::string producer);

 private:
  std::string producer_;
  std::vector<Prediction> ordered_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct BackendStats {
  std::size_t remote_calls = 0;
  std::size_t cache_hits = 0;
};

// A label-producing predictor. Implementations are immutable after
// construction and callable from concurrent workers.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual const std::string& name() const = 0;
  // Declared output label set; pipeline validation checks containment.
  virtual const std::set<int>& output_labels() const = 0;
  virtual Prediction predict(const TextSample& sample) const = 0;
  virtual BackendStats stats() const { return {}; }
};

// Replays an `id,label` CSV exported by an externally trained model.
class PredictionFileBackend : public ClassifierBackend {
 public:
  PredictionFileBackend(std::string name, const std::string& path,
                        std::optional<std::set<int>> declared_outputs = std::nullopt);

  const std::string& name() const override { return name_; }
  const std::set<int>& output_labels() const override { return outputs_; }
  Prediction predict(const TextSample& sample) const override;

 private:
  std::string name_;
  std::unordered_map<std::string, int> labels_;
  std::set<int> outputs_;
};

// Seeded stochastic oracle: per gold label, a probability row over predicted
// labels. Draws are counter-based (keyed by seed and sample id), so results
// are identical under any parallelism or call order.
struct MockSpec {
  std::map<int, std::map<int, double>> confusion;  // gold -> predicted -> probability
  std::uint64_t seed = 0;

  void validate() const;  // rows sum to 1 within 1e-9, entries non-negative
};

class MockBackend : public ClassifierBackend {
 public:
  MockBackend(std::string name, MockSpec spec);

  const std::string& name() const override { return name_; }
  const std::set<int>& output_labels() const override { return outputs_; }
  Prediction predict(const TextSample& sample) const override;

 private:
  std::string name_;
  MockSpec spec_;
  std::set<int> outputs_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_ms = 0;
};

// Prompted remote model: render -> cache -> remote (with retries) -> strict
// parse. Unparseable or failed requests resolve to the abstention label
// (the training majority class), flagged in provenance.
class PromptedBackend : public ClassifierBackend {
 public:
  PromptedBackend(std::string name, PromptTemplate prompt, std::string model_id,
                  std::shared_ptr<CompletionTransport> transport,
                  std::shared_ptr<ResponseCache> cache, RetryPolicy retry = {},
                  int abstention_label = 0, int max_output_length = 4,
                  double temperature = 0.0);

  const std::string& name() const override { return name_; }
  const std::set<int>& output_labels() const override { return outputs_; }
  Prediction predict(const TextSample& sample) const override;
  BackendStats stats() const override;

  const PromptTemplate& prompt() const { return prompt_; }

 private:
  CompletionRequest request_for(const TextSample& sample) const;

  std::string name_;
  PromptTemplate prompt_;
  std::string model_id_;
  std::shared_ptr<CompletionTransport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  int abstention_label_;
  int max_output_length_;
  double temperature_;
  std::set<int> outputs_;
  mutable std::atomic<std::size_t> remote_calls_{0};
  mutable std::atomic<std::size_t> cache_hits_{0};
};

struct BatchOptions {
  unsigned parallelism = 1;
  double failure_ceiling = 0.0;  // tolerated fraction of unresolved failures
  int abstention_label = 0;      // label for tolerated failures
};

// One prediction per sample, in dataset order regardless of completion
// order. Per-sample errors aggregate; the run aborts when the failure rate
// exceeds the ceiling (default: any failure aborts).
PredictionSet predict_batch(const ClassifierBackend& backend, const LabeledDataset& ds,
                            const BatchOptions& options = {});

}  // namespace htc
