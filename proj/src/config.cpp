#include "htc/config.hpp"

#include <algorithm>
#include <fstream>

#include "htc/errors.hpp"

namespace htc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config: " + field + " " + what);
}

const json& require(const json& node, const std::string& parent, const char* key) {
  auto it = node.find(key);
  if (it == node.end()) fail(parent.empty() ? key : parent + "." + key, "is required");
  return *it;
}

std::string require_string(const json& node, const std::string& parent, const char* key) {
  const json& v = require(node, parent, key);
  const std::string field = parent.empty() ? key : parent + "." + key;
  if (!v.is_string() || v.get<std::string>().empty()) fail(field, "must be a non-empty string");
  return v.get<std::string>();
}

void expect_object(const json& node, const std::string& field) {
  if (!node.is_object()) fail(field, "must be an object");
}

FileFormat format_for(const DatasetConfig& ds, const std::string& field,
                      const json& node) {
  if (auto it = node.find("format"); it != node.end()) {
    const std::string f = it->get<std::string>();
    if (f == "csv") return FileFormat::csv;
    if (f == "tsv") return FileFormat::tsv;
    fail(field + ".format", "must be csv or tsv, got '" + f + "'");
  }
  const std::filesystem::path p(ds.path);
  return p.extension() == ".tsv" ? FileFormat::tsv : FileFormat::csv;
}

ProviderConfig parse_provider(const std::string& name, const json& node) {
  const std::string field = "providers." + name;
  expect_object(node, field);
  ProviderConfig p = ProviderConfig::thin_envelope();
  p.name = name;
  p.endpoint = require_string(node, field, "endpoint");
  p.token_env = require_string(node, field, "token_env");
  if (auto it = node.find("body_template"); it != node.end()) {
    expect_object(*it, field + ".body_template");
    p.body_template = *it;
  }
  if (auto it = node.find("response_text_path"); it != node.end()) {
    p.response_text_path = it->get<std::string>();
  }
  if (auto it = node.find("max_in_flight"); it != node.end()) {
    p.max_in_flight = it->get<int>();
    if (p.max_in_flight < 1) fail(field + ".max_in_flight", "must be >= 1");
  }
  if (auto it = node.find("requests_per_minute"); it != node.end()) {
    p.requests_per_minute = it->get<int>();
    if (p.requests_per_minute < 0) fail(field + ".requests_per_minute", "must be >= 0");
  }
  if (auto it = node.find("retry_backoff_ms"); it != node.end()) {
    p.retry_backoff_ms = it->get<int>();
    if (p.retry_backoff_ms < 0) fail(field + ".retry_backoff_ms", "must be >= 0");
  }
  return p;
}

PromptTemplate parse_template(const std::string& name, const json& node) {
  const std::string field = "templates." + name;
  expect_object(node, field);
  const std::string instruction = require_string(node, field, "instruction");
  const json& outputs = require(node, field, "outputs");
  expect_object(outputs, field + ".outputs");
  std::map<char, int> mapping;
  for (const auto& [key, value] : outputs.items()) {
    if (key.size() != 1) {
      fail(field + ".outputs", "key '" + key + "' must be a single character");
    }
    if (!value.is_number_integer()) {
      fail(field + ".outputs." + key, "must be an integer label");
    }
    mapping[key[0]] = value.get<int>();
  }
  try {
    return PromptTemplate(name, instruction, std::move(mapping));
  } catch (const Error& e) {
    fail(field, std::string("is invalid: ") + e.what());
  }
}

BackendConfig parse_backend(const std::string& name, const json& node) {
  const std::string field = "backends." + name;
  expect_object(node, field);
  BackendConfig b;
  const std::string kind = require_string(node, field, "kind");
  if (kind == "prompted") {
    b.kind = BackendConfig::Kind::prompted;
    b.provider = require_string(node, field, "provider");
    b.model = require_string(node, field, "model");
    b.template_name = require_string(node, field, "template");
    if (auto it = node.find("max_output_length"); it != node.end()) {
      b.max_output_length = it->get<int>();
      if (b.max_output_length < 1) fail(field + ".max_output_length", "must be >= 1");
    }
    if (auto it = node.find("temperature"); it != node.end()) {
      b.temperature = it->get<double>();
      if (b.temperature < 0.0) fail(field + ".temperature", "must be >= 0");
    }
  } else if (kind == "file") {
    b.kind = BackendConfig::Kind::file;
    b.path = require_string(node, field, "path");
    if (auto it = node.find("outputs"); it != node.end()) {
      if (!it->is_array()) fail(field + ".outputs", "must be an array of labels");
      b.declared_outputs = it->get<std::vector<int>>();
    }
  } else if (kind == "mock") {
    b.kind = BackendConfig::Kind::mock;
    const json& confusion = require(node, field, "confusion");
    expect_object(confusion, field + ".confusion");
    for (const auto& [gold, row] : confusion.items()) {
      expect_object(row, field + ".confusion." + gold);
      int g = 0;
      try {
        std::size_t used = 0;
        g = std::stoi(gold, &used);
        if (used != gold.size()) throw std::invalid_argument(gold);
      } catch (const std::exception&) {
        fail(field + ".confusion", "key '" + gold + "' must be an integer label");
      }
      for (const auto& [pred, prob] : row.items()) {
        int p = 0;
        try {
          std::size_t used = 0;
          p = std::stoi(pred, &used);
          if (used != pred.size()) throw std::invalid_argument(pred);
        } catch (const std::exception&) {
          fail(field + ".confusion." + gold, "key '" + pred + "' must be an integer label");
        }
        b.mock.confusion[g][p] = prob.get<double>();
      }
    }
    if (auto it = node.find("seed"); it != node.end()) {
      b.mock.seed = it->get<std::uint64_t>();
    }
    try {
      b.mock.validate();
    } catch (const Error& e) {
      fail(field + ".confusion", std::string("is invalid: ") + e.what());
    }
  } else {
    fail(field + ".kind", "must be prompted, file, or mock, got '" + kind + "'");
  }
  return b;
}

PipelineConfig parse_pipeline(std::size_t index, const json& node) {
  const std::string field = "pipelines[" + std::to_string(index) + "]";
  expect_object(node, field);
  PipelineConfig p;
  p.name = require_string(node, field, "name");
  const std::string variant = require_string(node, field, "variant");
  try {
    p.variant = pipeline_variant_from_string(variant);
  } catch (const Error&) {
    fail(field + ".variant",
         "must be one of direct, two_stage, and_rule, or_rule, majority_vote, got '" +
             variant + "'");
  }
  const json& members = require(node, field, "members");
  if (!members.is_array() || members.empty()) {
    fail(field + ".members", "must be a non-empty array of backend names");
  }
  for (const auto& m : members) p.members.push_back(m.get<std::string>());
  if (auto it = node.find("tie_break"); it != node.end()) {
    if (!it->is_array()) fail(field + ".tie_break", "must be an array of backend names");
    for (const auto& m : *it) p.tie_break.push_back(m.get<std::string>());
  }
  if (auto it = node.find("router"); it != node.end()) {
    expect_object(*it, field + ".router");
    for (const auto& [platform, member] : it->items()) {
      Platform plat;
      try {
        plat = platform_from_string(platform);
      } catch (const Error&) {
        fail(field + ".router", "unknown platform '" + platform + "'");
      }
      p.router[plat] = member.get<std::string>();
    }
  }
  return p;
}

}  // namespace

const PromptTemplate& ExperimentConfig::resolve_template(const std::string& name) const {
  if (auto it = templates.find(name); it != templates.end()) return it->second;
  if (const PromptTemplate* builtin = find_builtin_template(name)) return *builtin;
  throw ConfigError("config: unknown prompt template '" + name + "'");
}

ExperimentConfig parse_config(const json& doc) {
  expect_object(doc, "document root");
  ExperimentConfig cfg;

  const std::string task = require_string(doc, "", "task");
  cfg.task = task_from_string(task);

  const json& datasets = require(doc, "", "datasets");
  expect_object(datasets, "datasets");
  if (datasets.empty()) fail("datasets", "must define at least one split");
  for (const auto& [split_name, node] : datasets.items()) {
    const Split split = split_from_string(split_name);
    const std::string field = "datasets." + split_name;
    DatasetConfig ds;
    if (node.is_string()) {
      ds.path = node.get<std::string>();
      ds.format = format_for(ds, field, json::object());
    } else {
      expect_object(node, field);
      ds.path = require_string(node, field, "path");
      ds.format = format_for(ds, field, node);
    }
    cfg.datasets[split] = std::move(ds);
  }

  if (auto it = doc.find("providers"); it != doc.end()) {
    expect_object(*it, "providers");
    for (const auto& [name, node] : it->items()) {
      cfg.providers.emplace(name, parse_provider(name, node));
    }
  }

  if (auto it = doc.find("templates"); it != doc.end()) {
    expect_object(*it, "templates");
    for (const auto& [name, node] : it->items()) {
      cfg.templates.emplace(name, parse_template(name, node));
    }
  }

  const json& backends = require(doc, "", "backends");
  expect_object(backends, "backends");
  if (backends.empty()) fail("backends", "must define at least one backend");
  for (const auto& [name, node] : backends.items()) {
    BackendConfig b = parse_backend(name, node);
    if (b.kind == BackendConfig::Kind::prompted) {
      const std::string field = "backends." + name;
      if (!cfg.providers.count(b.provider)) {
        fail(field + ".provider", "references undefined provider '" + b.provider + "'");
      }
      try {
        cfg.resolve_template(b.template_name);
      } catch (const Error&) {
        fail(field + ".template", "references unknown template '" + b.template_name + "'");
      }
    }
    cfg.backends.emplace(name, std::move(b));
  }

  const json& pipelines = require(doc, "", "pipelines");
  if (!pipelines.is_array() || pipelines.empty()) {
    fail("pipelines", "must be a non-empty array");
  }
  std::vector<std::string> pipeline_names;
  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    PipelineConfig p = parse_pipeline(i, pipelines[i]);
    const std::string field = "pipelines[" + std::to_string(i) + "]";
    if (std::find(pipeline_names.begin(), pipeline_names.end(), p.name) !=
        pipeline_names.end()) {
      fail(field + ".name", "duplicates pipeline '" + p.name + "'");
    }
    pipeline_names.push_back(p.name);
    for (std::size_t m = 0; m < p.members.size(); ++m) {
      if (!cfg.backends.count(p.members[m])) {
        fail(field + ".members[" + std::to_string(m) + "]",
             "references undefined backend '" + p.members[m] + "'");
      }
    }
    for (std::size_t t = 0; t < p.tie_break.size(); ++t) {
      if (std::find(p.members.begin(), p.members.end(), p.tie_break[t]) ==
          p.members.end()) {
        fail(field + ".tie_break[" + std::to_string(t) + "]",
             "references '" + p.tie_break[t] + "', which is not a member");
      }
    }
    for (const auto& [platform, member] : p.router) {
      if (std::find(p.members.begin(), p.members.end(), member) == p.members.end()) {
        fail(field + ".router." + to_string(platform),
             "references '" + member + "', which is not a member");
      }
    }
    cfg.pipelines.push_back(std::move(p));
  }

  if (auto it = doc.find("evaluation"); it != doc.end()) {
    expect_object(*it, "evaluation");
    if (auto b = it->find("beta"); b != it->end()) {
      cfg.evaluation.beta = b->get<double>();
      if (cfg.evaluation.beta <= 0.0) fail("evaluation.beta", "must be positive");
    }
    if (auto f = it->find("formats"); f != it->end()) {
      if (!f->is_array() || f->empty()) {
        fail("evaluation.formats", "must be a non-empty array");
      }
      cfg.evaluation.formats.clear();
      for (const auto& fmt : *f) {
        const std::string s = fmt.get<std::string>();
        if (s != "json" && s != "md") {
          fail("evaluation.formats", "must contain only json or md, got '" + s + "'");
        }
        cfg.evaluation.formats.push_back(s);
      }
    }
  }

  if (auto it = doc.find("cache_dir"); it != doc.end()) {
    cfg.cache_dir = it->get<std::string>();
  }
  if (auto it = doc.find("parallelism"); it != doc.end()) {
    const int p = it->get<int>();
    if (p < 1) fail("parallelism", "must be >= 1");
    cfg.parallelism = static_cast<unsigned>(p);
  }
  if (auto it = doc.find("retry"); it != doc.end()) {
    expect_object(*it, "retry");
    if (auto a = it->find("max_attempts"); a != it->end()) {
      cfg.retry.max_attempts = a->get<int>();
      if (cfg.retry.max_attempts < 1) fail("retry.max_attempts", "must be >= 1");
    }
    if (auto b = it->find("backoff_ms"); b != it->end()) {
      cfg.retry.backoff_ms = b->get<int>();
      if (cfg.retry.backoff_ms < 0) fail("retry.backoff_ms", "must be >= 0");
    }
  }
  if (auto it = doc.find("failure_ceiling"); it != doc.end()) {
    cfg.failure_ceiling = it->get<double>();
    if (cfg.failure_ceiling < 0.0 || cfg.failure_ceiling > 1.0) {
      fail("failure_ceiling", "must be within [0, 1]");
    }
  }
  if (auto it = doc.find("abstention_label"); it != doc.end()) {
    cfg.abstention_label = it->get<int>();
    if (!cfg.label_space().contains(cfg.abstention_label)) {
      fail("abstention_label", "label " + std::to_string(cfg.abstention_label) +
                                   " is outside the task's label space");
    }
  }
  if (auto it = doc.find("output_dir"); it != doc.end()) {
    cfg.output_dir = it->get<std::string>();
    if (cfg.output_dir.empty()) fail("output_dir", "must be a non-empty path");
  }

  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path.string() + "' has a malformed field: " + e.what());
  }
}

}  // namespace htc
