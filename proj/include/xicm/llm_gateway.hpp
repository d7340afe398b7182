#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "json.hpp"
#include "xicm/prompt.hpp"

namespace xicm {

enum class BackendKind { kHttp, kEchoNearest, kScripted };

std::string to_string(BackendKind kind);
/// Accepts "http", "echo", "echo_nearest" and "scripted". Throws ConfigError.
BackendKind parse_backend(std::string_view name);

struct GatewayConfig {
  std::string endpoint_url;  // full URL of the chat-completions route
  std::string model_name;
  std::string api_key;
  double temperature = 0.0;
  int max_output_tokens = 512;
  double request_timeout = 60.0;  // seconds
  int max_retries = 3;
  int max_concurrent_requests = 4;
  double backoff_base = 1.0;  // seconds; doubles per retry
  std::filesystem::path cache_dir;  // empty disables the response cache

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  /// Reads XICM_LLM_ENDPOINT, XICM_LLM_MODEL and XICM_LLM_API_KEY on top of
  /// the given defaults.
  static GatewayConfig from_environment(GatewayConfig base);
  static GatewayConfig from_environment();
};

struct CompletionRecord {
  std::string prompt_digest;
  std::string response_text;
  double latency = 0.0;  // seconds
  int attempt_count = 0;
  BackendKind backend = BackendKind::kScripted;
};

nlohmann::json to_json(const CompletionRecord& r);
CompletionRecord completion_from_json(const nlohmann::json& j);

/// The chat-completions request body for a prompt: system text in the system
/// role, everything else in one user message.
nlohmann::json chat_request_body(const PromptBundle& prompt, const GatewayConfig& cfg);

/// Offline oracle: the action lines of the first (most similar) block.
/// Throws Error for a prompt without demo blocks.
std::string echo_nearest_backend(const PromptBundle& prompt);

using ScriptedResponder = std::function<std::string(const PromptBundle&)>;

/// Sends prompts to one backend. Thread-safe; at most
/// max_concurrent_requests HTTP requests are in flight at once.
class LlmGateway {
 public:
  LlmGateway(GatewayConfig cfg, BackendKind backend, ScriptedResponder scripted = {});
  ~LlmGateway();
  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  const GatewayConfig& config() const { return cfg_; }
  BackendKind backend() const { return backend_; }

  /// Throws AuthFailure (401/403), GatewayTimeout, ExhaustedRetries or
  /// GatewayError for other non-retryable statuses and malformed replies.
  CompletionRecord complete(const PromptBundle& prompt) const;

  /// Same as complete() but with a per-call scripted responder, for
  /// backends that answer differently per episode.
  CompletionRecord complete(const PromptBundle& prompt, const ScriptedResponder& scripted) const;

 private:
  std::string call_http(const PromptBundle& prompt, int& attempts) const;
  std::optional<CompletionRecord> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const CompletionRecord& rec) const;
  std::string cache_key(const std::string& prompt_digest) const;

  GatewayConfig cfg_;
  BackendKind backend_;
  ScriptedResponder scripted_;
  mutable std::counting_semaphore<1024> in_flight_;
  mutable std::mutex cache_mutex_;
};

}  // namespace xicm
