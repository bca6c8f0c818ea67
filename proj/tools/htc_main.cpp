#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htc/errors.hpp"
#include "htc/runner.hpp"

namespace {

struct CliOptions {
  // run
  std::string config;
  std::string split = "dev";
  int parallelism = 0;  // 0 -> config value
  std::string cache_dir;
  // evaluate
  std::string gold;
  std::vector<std::string> predictions;
  std::string task;
  double beta = 2.0;
  std::vector<std::string> formats;
  std::string out_dir = "eval";
  std::vector<std::string> disagree;
  // cache
  std::string cache_action;
  bool yes = false;
};

int do_run(const CliOptions& opt) {
  htc::RunOptions options;
  options.split = htc::split_from_string(opt.split);
  if (opt.parallelism > 0) options.parallelism = static_cast<unsigned>(opt.parallelism);
  if (!opt.cache_dir.empty()) options.cache_dir = opt.cache_dir;

  const htc::RunResult result = htc::cmd_run(opt.config, options);
  std::cout << "run dir: " << result.run_dir.string() << "\n";
  for (const auto& [name, preds] : result.predictions) {
    std::cout << "  " << name << ": " << preds.size() << " predictions -> " << name
              << ".csv\n";
  }
  std::size_t remote = 0;
  std::size_t hits = 0;
  for (const auto& [_, stats] : result.manifest.backend_stats) {
    remote += stats.remote_calls;
    hits += stats.cache_hits;
  }
  std::cout << "remote calls: " << remote << ", cache hits: " << hits << "\n";
  std::cout << "manifest: " << (result.run_dir / "manifest.json").string() << "\n";
  return 0;
}

int do_evaluate(const CliOptions& opt) {
  htc::EvaluateOptions options;
  if (!opt.task.empty()) options.task = htc::task_from_string(opt.task);
  options.beta = opt.beta;
  if (!opt.formats.empty()) options.formats = opt.formats;
  options.out_dir = opt.out_dir;
  for (const auto& pair : opt.disagree) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == pair.size()) {
      throw htc::ConfigError("config: --disagree expects two names as 'a,b', got '" + pair +
                             "'");
    }
    options.disagree.emplace_back(pair.substr(0, comma), pair.substr(comma + 1));
  }

  std::vector<std::filesystem::path> paths(opt.predictions.begin(), opt.predictions.end());
  const htc::EvaluateResult result = htc::cmd_evaluate(opt.gold, paths, options);

  for (const auto& report : result.reports) {
    std::cout << to_markdown(report) << "\n";
  }
  if (result.comparison) {
    std::cout << to_markdown(*result.comparison) << "\n";
  }
  for (const auto& report : result.disagreements) {
    std::cout << to_markdown(report) << "\n";
  }
  if (!result.outputs.empty()) {
    std::cout << "reports written:\n";
    for (const auto& path : result.outputs) std::cout << "  " << path << "\n";
  }
  return 0;
}

int do_cache(const CliOptions& opt) {
  if (opt.cache_action == "stats") {
    const htc::CacheStats stats = htc::cmd_cache_stats(opt.cache_dir);
    std::cout << "entries: " << stats.entries << "\n"
              << "hits: " << stats.hits << "\n"
              << "misses: " << stats.misses << "\n";
    return 0;
  }
  htc::cmd_cache_purge(opt.cache_dir, opt.yes);
  std::cout << "cache purged: " << opt.cache_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment harness for health-text classification pipelines"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* run = app.add_subcommand("run", "Execute the pipelines of a config over a split");
  run->add_option("--config", opt.config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--split", opt.split, "Dataset split: train, dev, or test")
      ->default_val("dev");
  run->add_option("--parallelism", opt.parallelism, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  run->add_option("--cache-dir", opt.cache_dir, "Response cache directory (overrides config)");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score prediction CSVs against a gold dataset");
  evaluate->add_option("gold", opt.gold, "Gold dataset (CSV/TSV with labels)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("predictions", opt.predictions, "Prediction CSVs (id,label)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--task", opt.task, "Fix the label space: task3, task5, or task6");
  evaluate->add_option("--beta", opt.beta, "Beta for the class-1 F-beta score")
      ->default_val(2.0);
  evaluate->add_option("--format", opt.formats, "Report formats: json, md (repeatable)");
  evaluate->add_option("--out", opt.out_dir, "Directory for report files ('' = stdout only)")
      ->default_val("eval");
  evaluate->add_option("--disagree", opt.disagree,
                       "Pair 'a,b' of prediction-set names to error-analyze (repeatable)");

  CLI::App* cache = app.add_subcommand("cache", "Inspect or clear the response cache");
  cache->add_option("action", opt.cache_action, "stats or purge")
      ->required()
      ->check(CLI::IsMember({"stats", "purge"}));
  cache->add_option("--cache-dir", opt.cache_dir, "Response cache directory")->required();
  cache->add_flag("--yes", opt.yes, "Confirm destructive actions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  }

  try {
    if (run->parsed()) return do_run(opt);
    if (evaluate->parsed()) return do_evaluate(opt);
    return do_cache(opt);
  } catch (const htc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
