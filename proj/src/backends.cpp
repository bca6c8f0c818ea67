#include "htc/backends.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "htc/csv.hpp"
#include "htc/errors.hpp"
#include "htc/hashing.hpp"
#include "htc/parallel.hpp"

namespace htc {

void PredictionSet::add(Prediction p) {
  auto [it, inserted] = index_.emplace(p.sample_id, ordered_.size());
  if (!inserted) {
    throw DataError(ErrorCode::duplicate_id,
                    "predictions: duplicate sample id '" + p.sample_id + "'");
  }
  ordered_.push_back(std::move(p));
}

const Prediction* PredictionSet::find(const std::string& sample_id) const {
  auto it = index_.find(sample_id);
  return it == index_.end() ? nullptr : &ordered_[it->second];
}

std::string PredictionSet::to_csv() const {
  std::string out = "id,label\n";
  for (const auto& p : ordered_) {
    out += csv::format_row({p.sample_id, std::to_string(p.label)}, ',');
  }
  return out;
}

void PredictionSet::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError(ErrorCode::malformed_row, "predictions: cannot write '" + path + "'");
  }
  out << to_csv();
}

PredictionSet PredictionSet::read_csv(const std::string& path, std::string producer) {
  auto records = csv::read_file(path, ',');
  if (records.empty()) {
    throw DataError(ErrorCode::malformed_row, "predictions: '" + path + "' has no header row");
  }
  PredictionSet set(std::move(producer));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != 2) {
      throw DataError(ErrorCode::malformed_row, "predictions: malformed row " +
                                                    std::to_string(r) + " in '" + path + "'");
    }
    int label = 0;
    auto [ptr, ec] = std::from_chars(rec[1].data(), rec[1].data() + rec[1].size(), label);
    if (ec != std::errc() || ptr != rec[1].data() + rec[1].size()) {
      throw DataError(ErrorCode::malformed_row, "predictions: non-integer label at row " +
                                                    std::to_string(r) + " in '" + path + "'");
    }
    set.add({rec[0], label, set.producer(), std::nullopt});
  }
  return set;
}

PredictionFileBackend::PredictionFileBackend(std::string name, const std::string& path,
                                             std::optional<std::set<int>> declared_outputs)
    : name_(std::move(name)) {
  auto set = PredictionSet::read_csv(path, name_);
  std::set<int> observed;
  for (const auto& p : set.ordered()) {
    labels_.emplace(p.sample_id, p.label);
    observed.insert(p.label);
  }
  if (declared_outputs) {
    for (int l : observed) {
      if (!declared_outputs->count(l)) {
        throw ConfigError("backends: file backend '" + name_ + "' contains label " +
                          std::to_string(l) + " outside its declared output set");
      }
    }
    outputs_ = std::move(*declared_outputs);
  } else {
    outputs_ = std::move(observed);
  }
}

Prediction PredictionFileBackend::predict(const TextSample& sample) const {
  auto it = labels_.find(sample.id);
  if (it == labels_.end()) {
    throw BackendError(ErrorCode::missing_prediction,
                       "backends: file backend '" + name_ + "' has no prediction for id '" +
                           sample.id + "'");
  }
  return {sample.id, it->second, name_, std::nullopt};
}

void MockSpec::validate() const {
  if (confusion.empty()) {
    throw ConfigError("backends: mock confusion matrix is empty");
  }
  for (const auto& [gold, row] : confusion) {
    double sum = 0.0;
    for (const auto& [label, p] : row) {
      if (p < 0.0) {
        throw ConfigError("backends: mock confusion row for gold " + std::to_string(gold) +
                          " has a negative probability for label " + std::to_string(label));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("backends: mock confusion row for gold " + std::to_string(gold) +
                        " sums to " + std::to_string(sum) + ", expected 1");
    }
  }
}

MockBackend::MockBackend(std::string name, MockSpec spec)
    : name_(std::move(name)), spec_(std::move(spec)) {
  spec_.validate();
  for (const auto& [_, row] : spec_.confusion) {
    for (const auto& [label, p] : row) {
      if (p > 0.0) outputs_.insert(label);
    }
  }
}

Prediction MockBackend::predict(const TextSample& sample) const {
  if (!sample.gold_label) {
    throw DataError(ErrorCode::unlabeled_sample,
                    "backends: mock '" + name_ + "' needs a gold label for sample '" +
                        sample.id + "'");
  }
  auto row = spec_.confusion.find(*sample.gold_label);
  if (row == spec_.confusion.end()) {
    throw ConfigError("backends: mock '" + name_ + "' has no confusion row for gold label " +
                      std::to_string(*sample.gold_label));
  }
  const double u = keyed_uniform(spec_.seed, sample.id);
  double cumulative = 0.0;
  int chosen = row->second.rbegin()->first;  // guards against rounding at u ~ 1
  for (const auto& [label, p] : row->second) {
    cumulative += p;
    if (u < cumulative) {
      chosen = label;
      break;
    }
  }
  return {sample.id, chosen, name_, std::nullopt};
}

PromptedBackend::PromptedBackend(std::string name, PromptTemplate prompt, std::string model_id,
                                 std::shared_ptr<CompletionTransport> transport,
                                 std::shared_ptr<ResponseCache> cache, RetryPolicy retry,
                                 int abstention_label, int max_output_length, double temperature)
    : name_(std::move(name)),
      prompt_(std::move(prompt)),
      model_id_(std::move(model_id)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      retry_(retry),
      abstention_label_(abstention_label),
      max_output_length_(max_output_length),
      temperature_(temperature),
      outputs_(prompt_.output_labels()) {
  if (!transport_) {
    throw ConfigError("backends: prompted backend '" + name_ + "' has no transport");
  }
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
  // outputs_ stays the template's range. The abstention fallback may escape
  // it (it's the corpus-wide majority class); provenance flags those cases.
}

CompletionRequest PromptedBackend::request_for(const TextSample& sample) const {
  return {model_id_, prompt_.instruction(), sample.text, max_output_length_, temperature_};
}

BackendStats PromptedBackend::stats() const {
  return {remote_calls_.load(), cache_hits_.load()};
}

Prediction PromptedBackend::predict(const TextSample& sample) const {
  const CompletionRequest request = request_for(sample);
  const CacheKey key{request.model_id, request.instruction, request.input_text,
                     request.max_output_length, request.temperature};

  if (cache_) {
    if (auto entry = cache_->get(key)) {
      ++cache_hits_;
      try {
        int label = parse_response(entry->response, prompt_);
        return {sample.id, label, name_, entry->response};
      } catch (const BackendError&) {
        // The cached answer is the model's final word at temperature 0;
        // abstain instead of re-spending budget on the same request.
        return {sample.id, abstention_label_, name_ + "[abstained:malformed]",
                entry->response};
      }
    }
  }

  std::optional<std::string> last_response;
  std::string last_error = "remote_failure";
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1 && retry_.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(retry_.backoff_ms * (attempt - 1)));
    }
    std::string raw;
    try {
      ++remote_calls_;
      raw = transport_->complete(request);
    } catch (const ConfigError&) {
      throw;  // misconfiguration is not retryable and must abort the run
    } catch (const Error&) {
      last_error = "remote_failure";
      continue;
    }
    last_response = raw;
    try {
      int label = parse_response(raw, prompt_);
      if (cache_) cache_->put(key, {raw, std::time(nullptr)});
      return {sample.id, label, name_, raw};
    } catch (const BackendError&) {
      last_error = "malformed";
    }
  }

  if (last_response && cache_) {
    cache_->put(key, {*last_response, std::time(nullptr)});
  }
  return {sample.id, abstention_label_, name_ + "[abstained:" + last_error + "]",
          last_response};
}

PredictionSet predict_batch(const ClassifierBackend& backend, const LabeledDataset& ds,
                            const BatchOptions& options) {
  if (options.parallelism < 1) {
    throw ConfigError("backends: parallelism must be >= 1");
  }
  const std::size_t n = ds.size();
  std::vector<Prediction> results(n);
  std::vector<std::string> failures(n);
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  parallel_indexed(n, options.parallelism, [&](std::size_t i) {
    try {
      results[i] = backend.predict(ds.samples[i]);
    } catch (const ConfigError&) {
      std::scoped_lock lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
    } catch (const Error& e) {
      failures[i] = e.what();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  if (fatal) std::rethrow_exception(fatal);

  std::size_t failed = 0;
  std::string first_failure;
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      ++failed;
      if (first_failure.empty()) first_failure = failures[i];
    }
  }
  if (failed > 0 && static_cast<double>(failed) > options.failure_ceiling * static_cast<double>(n)) {
    throw BackendError(ErrorCode::batch_failed,
                       "backends: " + std::to_string(failed) + " of " + std::to_string(n) +
                           " samples failed (ceiling " + std::to_string(options.failure_ceiling) +
                           "); first: " + first_failure);
  }

  PredictionSet set(backend.name());
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      set.add({ds.samples[i].id, options.abstention_label,
               backend.name() + "[failed:" + failures[i] + "]", std::nullopt});
    } else {
      set.add(std::move(results[i]));
    }
  }
  return set;
}

}  // namespace htc
