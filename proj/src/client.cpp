#include "htc/client.hpp"

#include <cstdlib>
#include <charconv>

#include <httplib.h>

#include "htc/errors.hpp"

namespace htc {

using nlohmann::json;

ProviderConfig ProviderConfig::thin_envelope() {
  ProviderConfig p;
  p.body_template = json{{"model", "{model}"},
                         {"instruction", "{instruction}"},
                         {"input", "{input}"},
                         {"max_tokens", "{max_tokens}"},
                         {"temperature", "{temperature}"}};
  p.response_text_path = "text";
  return p;
}

namespace {

std::string substitute_all(std::string text, const CompletionRequest& r) {
  auto replace = [&text](const std::string& placeholder, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
      text.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  };
  replace("{model}", r.model_id);
  replace("{instruction}", r.instruction);
  replace("{input}", r.input_text);
  replace("{prompt}", r.instruction + "\n\n" + r.input_text);
  replace("{max_tokens}", std::to_string(r.max_output_length));
  replace("{temperature}", json(r.temperature).dump());
  return text;
}

json substitute_node(const json& node, const CompletionRequest& r) {
  if (node.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : node.items()) out[k] = substitute_node(v, r);
    return out;
  }
  if (node.is_array()) {
    json out = json::array();
    for (const auto& v : node) out.push_back(substitute_node(v, r));
    return out;
  }
  if (node.is_string()) {
    const auto& s = node.get_ref<const std::string&>();
    if (s == "{max_tokens}") return r.max_output_length;
    if (s == "{temperature}") return r.temperature;
    if (s == "{model}") return r.model_id;
    if (s == "{instruction}") return r.instruction;
    if (s == "{input}") return r.input_text;
    if (s == "{prompt}") return r.instruction + "\n\n" + r.input_text;
    return substitute_all(s, r);
  }
  return node;
}

}  // namespace

json build_request_body(const ProviderConfig& provider, const CompletionRequest& r) {
  const json& tmpl = provider.body_template.is_null() || provider.body_template.empty()
                         ? ProviderConfig::thin_envelope().body_template
                         : provider.body_template;
  return substitute_node(tmpl, r);
}

std::string extract_text(const json& body, const std::string& dotted_path) {
  const json* node = &body;
  std::size_t start = 0;
  while (start <= dotted_path.size()) {
    std::size_t dot = dotted_path.find('.', start);
    std::string part = dotted_path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!part.empty()) {
      if (node->is_array()) {
        std::size_t index = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), index);
        if (ec != std::errc() || ptr != part.data() + part.size() || index >= node->size()) {
          throw BackendError(ErrorCode::remote_failure,
                             "client: response path '" + dotted_path + "' not found");
        }
        node = &(*node)[index];
      } else if (node->is_object() && node->contains(part)) {
        node = &(*node)[part];
      } else {
        throw BackendError(ErrorCode::remote_failure,
                           "client: response path '" + dotted_path + "' not found");
      }
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!node->is_string()) {
    throw BackendError(ErrorCode::remote_failure,
                       "client: response path '" + dotted_path + "' is not a string");
  }
  return node->get<std::string>();
}

RateLimiter::RateLimiter(int max_in_flight, int requests_per_minute, Clock clock)
    : max_in_flight_(max_in_flight > 0 ? max_in_flight : 1),
      requests_per_minute_(requests_per_minute),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }) {}

bool RateLimiter::budget_available_locked() {
  if (requests_per_minute_ <= 0) return true;
  const auto cutoff = clock_() - std::chrono::minutes(1);
  while (!recent_.empty() && recent_.front() < cutoff) recent_.pop_front();
  return recent_.size() < static_cast<std::size_t>(requests_per_minute_);
}

void RateLimiter::note_request_locked() {
  if (requests_per_minute_ > 0) recent_.push_back(clock_());
}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  // wait_for (not wait): the sliding budget frees up by time passing alone.
  while (in_flight_ >= max_in_flight_ || !budget_available_locked()) {
    cv_.wait_for(lock, std::chrono::milliseconds(50));
  }
  ++in_flight_;
  note_request_locked();
}

bool RateLimiter::try_acquire() {
  std::unique_lock lock(mutex_);
  if (in_flight_ >= max_in_flight_ || !budget_available_locked()) return false;
  ++in_flight_;
  note_request_locked();
  return true;
}

void RateLimiter::release() {
  {
    std::unique_lock lock(mutex_);
    --in_flight_;
  }
  cv_.notify_all();
}

namespace {

// Splits "https://host:port/path" into scheme://host[:port] and /path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = endpoint.find('/', host_start);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

HttpCompletionTransport::HttpCompletionTransport(ProviderConfig provider)
    : provider_(std::move(provider)),
      limiter_(provider_.max_in_flight, provider_.requests_per_minute) {
  if (provider_.endpoint.empty()) {
    throw ConfigError("client: provider '" + provider_.name + "' has no endpoint");
  }
  std::tie(scheme_host_, path_) = split_endpoint(provider_.endpoint);
}

std::string HttpCompletionTransport::complete(const CompletionRequest& request) {
  std::string token;
  if (!provider_.token_env.empty()) {
    const char* value = std::getenv(provider_.token_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw ConfigError("client: environment variable '" + provider_.token_env +
                        "' for provider '" + provider_.name + "' is not set");
    }
    token = value;
  }

  RateLimiter::Slot slot(limiter_);
  httplib::Client http(scheme_host_);
  http.set_connection_timeout(15);
  http.set_read_timeout(120);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  const std::string body = build_request_body(provider_, request).dump();
  auto res = http.Post(path_, headers, body, "application/json");
  if (!res) {
    throw BackendError(ErrorCode::remote_failure,
                       "client: request to " + provider_.endpoint + " failed: " +
                           httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(ErrorCode::remote_failure,
                       "client: " + provider_.endpoint + " returned HTTP " +
                           std::to_string(res->status));
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendError(ErrorCode::remote_failure,
                       std::string("client: response is not JSON: ") + e.what());
  }
  return extract_text(parsed, provider_.response_text_path);
}

}  // namespace htc
