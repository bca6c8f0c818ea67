#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "htc/backends.hpp"
#include "htc/cache.hpp"
#include "htc/client.hpp"
#include "htc/config.hpp"
#include "htc/evaluation.hpp"
#include "htc/pipelines.hpp"

namespace htc {

struct RunOptions {
  Split split = Split::dev;
  std::optional<unsigned> parallelism;    // overrides config
  std::optional<std::string> cache_dir;   // overrides config
  TransportFactory transport_factory;     // empty -> real HTTP transport
};

struct RunManifest {
  std::string config_checksum;
  std::string split;
  std::map<std::string, std::string> dataset_checksums;  // path -> checksum
  std::map<std::string, BackendStats> backend_stats;
  std::int64_t wall_clock_ms = 0;
  std::vector<std::string> outputs;  // prediction CSV paths
};

nlohmann::json to_json(const RunManifest& manifest);

struct RunResult {
  std::filesystem::path run_dir;
  RunManifest manifest;
  std::vector<std::pair<std::string, PredictionSet>> predictions;  // config order
};

// Config-resolved experiment: constructed backends, a shared response cache,
// and validated pipeline specs, ready to run over any loaded split.
struct ExperimentRuntime {
  ExperimentConfig config;
  std::shared_ptr<ResponseCache> cache;
  std::map<std::string, std::shared_ptr<ClassifierBackend>> backends;
  std::vector<PipelineSpec> pipelines;
};

ExperimentRuntime build_runtime(ExperimentConfig config, const RunOptions& options = {});

// Executes every configured pipeline over the chosen split and writes one
// `id,label` CSV per pipeline plus manifest.json into a fresh run directory
// named by config checksum + timestamp.
RunResult cmd_run(const std::filesystem::path& config_path, const RunOptions& options = {});

struct EvaluateOptions {
  std::optional<TaskId> task;  // fixes the label space; else inferred from gold
  double beta = 2.0;
  std::vector<std::string> formats = {"json", "md"};
  std::filesystem::path out_dir;  // empty -> no files written
  // producer-name pairs; empty with exactly two sets -> that one pair
  std::vector<std::pair<std::string, std::string>> disagree;
  std::size_t max_examples = 10;
};

struct EvaluateResult {
  std::vector<MetricReport> reports;
  std::optional<ComparisonTable> comparison;
  std::vector<DisagreementReport> disagreements;
  std::vector<std::string> outputs;  // files written
};

EvaluateResult cmd_evaluate(const std::filesystem::path& gold_path,
                            const std::vector<std::filesystem::path>& prediction_paths,
                            const EvaluateOptions& options = {});

// stats: entry/hit/miss counts; a missing store reads as empty.
CacheStats cmd_cache_stats(const std::filesystem::path& cache_dir);
// purge: empties the store; refuses without the confirmation flag.
void cmd_cache_purge(const std::filesystem::path& cache_dir, bool confirmed);

}  // namespace htc
