#include "htc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include "htc/errors.hpp"
#include "htc/hashing.hpp"

namespace htc {

using nlohmann::json;

namespace {

std::shared_ptr<ClassifierBackend> build_backend(const std::string& name,
                                                 const BackendConfig& def,
                                                 const ExperimentConfig& config,
                                                 const std::shared_ptr<ResponseCache>& cache,
                                                 const TransportFactory& make_transport) {
  switch (def.kind) {
    case BackendConfig::Kind::prompted: {
      const ProviderConfig& provider = config.providers.at(def.provider);
      auto transport = make_transport(provider);
      if (!transport) {
        throw BackendError(ErrorCode::remote_failure,
                           "runner: transport factory returned nothing for provider '" +
                               provider.name + "'");
      }
      return std::make_shared<PromptedBackend>(
          name, config.resolve_template(def.template_name), def.model, std::move(transport),
          cache, config.retry, config.abstention_label, def.max_output_length,
          def.temperature);
    }
    case BackendConfig::Kind::file: {
      std::optional<std::set<int>> outputs;
      if (def.declared_outputs) {
        outputs.emplace(def.declared_outputs->begin(), def.declared_outputs->end());
      }
      return std::make_shared<PredictionFileBackend>(name, def.path, std::move(outputs));
    }
    case BackendConfig::Kind::mock:
      return std::make_shared<MockBackend>(name, def.mock);
  }
  throw ConfigError("runner: backend '" + name + "' has an unknown kind");
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::filesystem::path fresh_run_dir(const std::filesystem::path& base,
                                    const std::string& stem) {
  std::filesystem::path dir = base / stem;
  for (int suffix = 2; std::filesystem::exists(dir); ++suffix) {
    dir = base / (stem + "-" + std::to_string(suffix));
  }
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError(ErrorCode::malformed_row, "runner: cannot write '" + path.string() + "'");
  }
  out << content;
}

}  // namespace

json to_json(const RunManifest& manifest) {
  json backends = json::object();
  for (const auto& [name, stats] : manifest.backend_stats) {
    backends[name] = {{"remote_calls", stats.remote_calls}, {"cache_hits", stats.cache_hits}};
  }
  return json{{"config_checksum", manifest.config_checksum},
              {"split", manifest.split},
              {"dataset_checksums", manifest.dataset_checksums},
              {"backends", backends},
              {"wall_clock_ms", manifest.wall_clock_ms},
              {"outputs", manifest.outputs}};
}

ExperimentRuntime build_runtime(ExperimentConfig config, const RunOptions& options) {
  ExperimentRuntime rt{std::move(config), nullptr, {}, {}};

  const std::string cache_dir =
      options.cache_dir ? *options.cache_dir : rt.config.cache_dir;
  rt.cache = std::make_shared<ResponseCache>(cache_dir);

  TransportFactory make_transport = options.transport_factory;
  if (!make_transport) {
    make_transport = [](const ProviderConfig& provider) {
      return std::make_shared<HttpCompletionTransport>(provider);
    };
  }

  for (const auto& [name, def] : rt.config.backends) {
    rt.backends.emplace(name, build_backend(name, def, rt.config, rt.cache, make_transport));
  }

  const LabelSpace space = rt.config.label_space();
  for (const auto& p : rt.config.pipelines) {
    PipelineSpec spec;
    spec.name = p.name;
    spec.variant = p.variant;
    for (const auto& member : p.members) spec.members.push_back(rt.backends.at(member));
    for (const auto& name : p.tie_break) {
      const auto it = std::find(p.members.begin(), p.members.end(), name);
      spec.tie_break.push_back(static_cast<std::size_t>(it - p.members.begin()));
    }
    for (const auto& [platform, member] : p.router) {
      const auto it = std::find(p.members.begin(), p.members.end(), member);
      spec.router[platform] = static_cast<std::size_t>(it - p.members.begin());
    }
    validate_pipeline(spec, space);
    rt.pipelines.push_back(std::move(spec));
  }
  return rt;
}

RunResult cmd_run(const std::filesystem::path& config_path, const RunOptions& options) {
  ExperimentConfig config = load_config(config_path);

  const auto ds_it = config.datasets.find(options.split);
  if (ds_it == config.datasets.end()) {
    throw ConfigError("config: datasets defines no '" + to_string(options.split) +
                      "' split");
  }
  const DatasetConfig& ds_cfg = ds_it->second;
  const LabeledDataset dataset =
      load_dataset(ds_cfg.path, ds_cfg.format, config.label_space(), options.split);

  ExperimentRuntime rt = build_runtime(std::move(config), options);

  RunResult result;
  result.manifest.config_checksum = file_checksum(config_path.string());
  result.manifest.split = to_string(options.split);
  result.manifest.dataset_checksums[ds_cfg.path] = file_checksum(ds_cfg.path);

  result.run_dir = fresh_run_dir(rt.config.output_dir,
                                 result.manifest.config_checksum + "-" + timestamp_utc());

  BatchOptions batch;
  batch.parallelism = options.parallelism ? *options.parallelism : rt.config.parallelism;
  batch.failure_ceiling = rt.config.failure_ceiling;
  batch.abstention_label = rt.config.abstention_label;

  const auto started = std::chrono::steady_clock::now();
  for (const auto& spec : rt.pipelines) {
    PredictionSet preds = run_pipeline(spec, dataset, batch);
    const std::filesystem::path out = result.run_dir / (spec.name + ".csv");
    preds.write_csv(out.string());
    result.manifest.outputs.push_back(out.string());
    result.predictions.emplace_back(spec.name, std::move(preds));
  }
  result.manifest.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::steady_clock::now() - started)
                                      .count();

  for (const auto& [name, backend] : rt.backends) {
    result.manifest.backend_stats[name] = backend->stats();
  }

  write_text(result.run_dir / "manifest.json", to_json(result.manifest).dump(2) + "\n");
  rt.cache->flush();
  return result;
}

namespace {

LabeledDataset load_gold(const std::filesystem::path& path,
                         const std::optional<TaskId>& task) {
  const FileFormat format =
      path.extension() == ".tsv" ? FileFormat::tsv : FileFormat::csv;
  if (task) {
    return load_dataset(path.string(), format, LabelSpace::for_task(*task), Split::dev);
  }
  // No declared task: load against the widest space, then shrink to binary
  // when no label exceeds 1.
  LabeledDataset ds = load_dataset(path.string(), format, LabelSpace::for_task(TaskId::task3),
                                   Split::dev);
  bool multiclass = false;
  for (const auto& s : ds.samples) {
    if (s.gold_label && *s.gold_label > 1) {
      multiclass = true;
      break;
    }
  }
  if (!multiclass) {
    return LabeledDataset{LabelSpace::for_task(TaskId::task5), std::move(ds.samples),
                          ds.split};
  }
  return ds;
}

std::string unique_producer(const std::filesystem::path& path,
                            std::vector<std::string>& taken) {
  std::string name = path.stem().string();
  if (name.empty()) name = "predictions";
  std::string candidate = name;
  for (int suffix = 2;
       std::find(taken.begin(), taken.end(), candidate) != taken.end(); ++suffix) {
    candidate = name + "-" + std::to_string(suffix);
  }
  taken.push_back(candidate);
  return candidate;
}

}  // namespace

EvaluateResult cmd_evaluate(const std::filesystem::path& gold_path,
                            const std::vector<std::filesystem::path>& prediction_paths,
                            const EvaluateOptions& options) {
  if (prediction_paths.empty()) {
    throw ConfigError("config: evaluate needs at least one prediction file");
  }
  for (const auto& f : options.formats) {
    if (f != "json" && f != "md") {
      throw ConfigError("config: unknown report format '" + f + "'");
    }
  }

  const LabeledDataset gold = load_gold(gold_path, options.task);

  EvaluateResult result;
  std::vector<PredictionSet> sets;
  std::vector<std::string> producers;
  for (const auto& path : prediction_paths) {
    sets.push_back(
        PredictionSet::read_csv(path.string(), unique_producer(path, producers)));
  }

  const bool write_files = !options.out_dir.empty();
  if (write_files) std::filesystem::create_directories(options.out_dir);
  auto emit = [&](const std::string& stem, const json& as_json, const std::string& as_md) {
    for (const auto& f : options.formats) {
      const std::filesystem::path path =
          options.out_dir / (stem + (f == "json" ? ".json" : ".md"));
      write_text(path, f == "json" ? as_json.dump(2) + "\n" : as_md);
      result.outputs.push_back(path.string());
    }
  };

  for (const auto& set : sets) {
    const ConfusionMatrix cm = confusion(gold, set);
    MetricReport report = make_report(set.producer(), cm, options.beta);
    if (write_files) emit(set.producer() + ".metrics", to_json(report), to_markdown(report));
    result.reports.push_back(std::move(report));
  }

  if (sets.size() >= 2) {
    result.comparison = compare_systems(result.reports);
    if (write_files) {
      emit("comparison", to_json(*result.comparison), to_markdown(*result.comparison));
    }
  }

  std::vector<std::pair<std::string, std::string>> pairs = options.disagree;
  if (pairs.empty() && sets.size() == 2) {
    pairs.emplace_back(sets[0].producer(), sets[1].producer());
  }
  for (const auto& [name_a, name_b] : pairs) {
    auto locate = [&](const std::string& name) -> const PredictionSet& {
      for (const auto& s : sets) {
        if (s.producer() == name) return s;
      }
      throw ConfigError("config: --disagree references unknown prediction set '" + name +
                        "'");
    };
    DisagreementReport report =
        error_analysis(gold, locate(name_a), locate(name_b), options.max_examples);
    if (write_files) {
      emit(name_a + "_vs_" + name_b + ".disagreement", to_json(report),
           to_markdown(report));
    }
    result.disagreements.push_back(std::move(report));
  }
  return result;
}

CacheStats cmd_cache_stats(const std::filesystem::path& cache_dir) {
  if (cache_dir.empty() || !std::filesystem::exists(cache_dir)) return {};
  ResponseCache cache(cache_dir);
  return cache.stats();  // destructor flush rewrites identical counters
}

void cmd_cache_purge(const std::filesystem::path& cache_dir, bool confirmed) {
  if (!confirmed) {
    throw ConfigError("config: cache purge requires --yes");
  }
  if (cache_dir.empty() || !std::filesystem::exists(cache_dir)) return;
  ResponseCache cache(cache_dir);
  cache.purge();
}

}  // namespace htc
