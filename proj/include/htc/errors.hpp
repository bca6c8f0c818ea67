#pragma once

#include <stdexcept>
#include <string>

namespace htc {

// Exit-code buckets used by the CLI: config -> 1, data -> 2, backend -> 3.
enum class ErrorCategory { config = 1, data = 2, backend = 3 };

enum class ErrorCode {
  // config
  config_invalid,
  // corpus / data
  malformed_row,
  duplicate_id,
  label_out_of_space,
  unlabeled_sample,
  id_mismatch,
  // backends
  malformed_response,
  missing_prediction,
  remote_failure,
  corrupt_cache_file,
  batch_failed,
  // pipelines
  empty_member_list,
  router_gap,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), category_(category), code_(code) {}

  ErrorCategory category() const { return category_; }
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorCategory::config, ErrorCode::config_invalid, std::move(message)) {}
};

class DataError : public Error {
 public:
  DataError(ErrorCode code, std::string message)
      : Error(ErrorCategory::data, code, std::move(message)) {}
};

class BackendError : public Error {
 public:
  BackendError(ErrorCode code, std::string message)
      : Error(ErrorCategory::backend, code, std::move(message)) {}
};

}  // namespace htc
