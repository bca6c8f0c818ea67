#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace htc {

// One zero-shot classification call. Temperature stays 0 unless a config
// overrides it.
struct CompletionRequest {
  std::string model_id;
  std::string instruction;
  std::string input_text;
  int max_output_length = 4;
  double temperature = 0.0;
};

// Anything that can answer a completion request with raw text. Implementations
// must be safe to call from concurrent workers. Failures surface as
// BackendError(remote_failure).
class CompletionTransport {
 public:
  virtual ~CompletionTransport() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
};

// Provider adapters are configuration: a JSON body template whose string
// values may reference {model}, {instruction}, {input}, {prompt},
// {max_tokens} and {temperature}, plus a dotted path locating the response
// text. The default adapter is the thin envelope
//   {model, instruction, input, max_tokens, temperature} -> {text}.
struct ProviderConfig {
  std::string name = "default";
  std::string endpoint;               // e.g. https://api.example.com/v1/complete
  std::string token_env;              // environment variable holding the bearer token
  nlohmann::json body_template;       // empty -> thin envelope
  std::string response_text_path = "text";
  int max_in_flight = 4;
  int requests_per_minute = 0;        // 0 -> unlimited
  int retry_backoff_ms = 250;

  static ProviderConfig thin_envelope();
};

// Fills the adapter's body template from a request. A string value that is
// exactly one placeholder keeps the field's native type (numbers stay
// numbers); placeholders inside longer strings substitute textually.
nlohmann::json build_request_body(const ProviderConfig& provider, const CompletionRequest& r);

// Resolves a dotted path ("choices.0.message.content") into a JSON document.
// Throws BackendError(remote_failure) when the path is absent or not a string.
std::string extract_text(const nlohmann::json& body, const std::string& dotted_path);

// Enforces a max-in-flight bound and a sliding per-minute request budget.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  RateLimiter(int max_in_flight, int requests_per_minute, Clock clock = nullptr);

  void acquire();  // blocks until a slot and budget are available
  void release();

  // Non-blocking variant used by tests.
  bool try_acquire();

  class Slot {
   public:
    explicit Slot(RateLimiter& limiter) : limiter_(&limiter) { limiter_->acquire(); }
    ~Slot() {
      if (limiter_) limiter_->release();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    RateLimiter* limiter_;
  };

 private:
  bool budget_available_locked();
  void note_request_locked();

  int max_in_flight_;
  int requests_per_minute_;
  Clock clock_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::deque<std::chrono::steady_clock::time_point> recent_;
};

// POSTs the adapted envelope to the provider endpoint with a bearer token
// taken from the environment. Not exercised by tests (they stay offline);
// the CLI wires it in for real runs.
class HttpCompletionTransport : public CompletionTransport {
 public:
  explicit HttpCompletionTransport(ProviderConfig provider);
  std::string complete(const CompletionRequest& request) override;

 private:
  ProviderConfig provider_;
  std::string scheme_host_;
  std::string path_;
  RateLimiter limiter_;
};

using TransportFactory =
    std::function<std::shared_ptr<CompletionTransport>(const ProviderConfig&)>;

}  // namespace htc
