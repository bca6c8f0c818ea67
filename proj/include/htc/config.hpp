#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htc/backends.hpp"
#include "htc/client.hpp"
#include "htc/corpus.hpp"
#include "htc/pipelines.hpp"
#include "htc/prompts.hpp"

namespace htc {

struct DatasetConfig {
  std::string path;
  FileFormat format = FileFormat::csv;  // default inferred from extension
};

// Backend definition before resolution: prompted backends still reference
// their provider and template by name.
struct BackendConfig {
  enum class Kind { prompted, file, mock };

  Kind kind = Kind::prompted;
  // prompted
  std::string provider;
  std::string model;
  std::string template_name;
  int max_output_length = 4;
  double temperature = 0.0;
  // file
  std::string path;
  std::optional<std::vector<int>> declared_outputs;
  // mock
  MockSpec mock;
};

struct PipelineConfig {
  std::string name;
  PipelineVariant variant = PipelineVariant::direct;
  std::vector<std::string> members;    // backend names
  std::vector<std::string> tie_break;  // backend names, majority_vote only
  std::map<Platform, std::string> router;  // platform -> backend name, direct only
};

struct EvaluationConfig {
  double beta = 2.0;
  std::vector<std::string> formats = {"json", "md"};
};

struct ExperimentConfig {
  TaskId task = TaskId::task5;
  std::map<Split, DatasetConfig> datasets;
  std::map<std::string, ProviderConfig> providers;
  std::map<std::string, PromptTemplate> templates;  // customs layered over built-ins
  std::map<std::string, BackendConfig> backends;
  std::vector<PipelineConfig> pipelines;
  EvaluationConfig evaluation;
  std::string cache_dir;  // empty -> in-memory cache only
  unsigned parallelism = 1;
  RetryPolicy retry;
  double failure_ceiling = 0.0;
  int abstention_label = 0;
  std::string output_dir = "runs";

  LabelSpace label_space() const { return LabelSpace::for_task(task); }
  // Custom template if defined, else built-in; ConfigError when neither.
  const PromptTemplate& resolve_template(const std::string& name) const;
};

// Parse + cross-reference validation. Every reference (backend, provider,
// template, tie_break/router member) must resolve; violations raise
// ConfigError naming the offending field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace htc
