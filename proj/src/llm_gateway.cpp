#include "xicm/llm_gateway.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include "httplib.h"
#include "xicm/digest.hpp"
#include "xicm/errors.hpp"
#include "xicm/rng.hpp"

namespace xicm {

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp:
      return "http";
    case BackendKind::kEchoNearest:
      return "echo_nearest";
    case BackendKind::kScripted:
      return "scripted";
  }
  return "unknown";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "echo" || name == "echo_nearest") return BackendKind::kEchoNearest;
  if (name == "scripted") return BackendKind::kScripted;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected http, echo or scripted)");
}

void GatewayConfig::validate() const {
  if (!(request_timeout > 0.0)) throw ConfigError("gateway timeout must be positive");
  if (max_retries < 0) throw ConfigError("gateway max_retries must be non-negative");
  if (max_concurrent_requests < 1 || max_concurrent_requests > 1024)
    throw ConfigError("gateway max_concurrent_requests must lie in [1, 1024]");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be positive");
  if (!(backoff_base >= 0.0)) throw ConfigError("backoff base must be non-negative");
}

GatewayConfig GatewayConfig::from_environment() { return from_environment(GatewayConfig{}); }

GatewayConfig GatewayConfig::from_environment(GatewayConfig base) {
  if (const char* v = std::getenv("XICM_LLM_ENDPOINT")) base.endpoint_url = v;
  if (const char* v = std::getenv("XICM_LLM_MODEL")) base.model_name = v;
  if (const char* v = std::getenv("XICM_LLM_API_KEY")) base.api_key = v;
  return base;
}

nlohmann::json to_json(const CompletionRecord& r) {
  return {{"prompt_digest", r.prompt_digest},
          {"response_text", r.response_text},
          {"latency", r.latency},
          {"attempt_count", r.attempt_count},
          {"backend", to_string(r.backend)}};
}

CompletionRecord completion_from_json(const nlohmann::json& j) {
  CompletionRecord r;
  r.prompt_digest = j.at("prompt_digest").get<std::string>();
  r.response_text = j.at("response_text").get<std::string>();
  r.latency = j.at("latency").get<double>();
  r.attempt_count = j.at("attempt_count").get<int>();
  r.backend = parse_backend(j.at("backend").get<std::string>());
  return r;
}

nlohmann::json chat_request_body(const PromptBundle& prompt, const GatewayConfig& cfg) {
  return {
      {"model", cfg.model_name},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_text}},
                              {{"role", "user"}, {"content", prompt.user_text()}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_output_tokens},
  };
}

std::string echo_nearest_backend(const PromptBundle& prompt) {
  if (prompt.demo_blocks.empty()) throw Error("echo backend needs at least one demonstration block");
  std::string out;
  for (const auto& a : prompt.demo_blocks.front().actions) {
    if (!out.empty()) out += '\n';
    out += textualize_action(a);
  }
  return out;
}

LlmGateway::LlmGateway(GatewayConfig cfg, BackendKind backend, ScriptedResponder scripted)
    : cfg_(std::move(cfg)),
      backend_(backend),
      scripted_(std::move(scripted)),
      in_flight_((cfg_.validate(), cfg_.max_concurrent_requests)) {}

LlmGateway::~LlmGateway() = default;

std::string LlmGateway::cache_key(const std::string& prompt_digest) const {
  char temp[64];
  std::snprintf(temp, sizeof temp, "%.17g", cfg_.temperature);
  return sha256_hex(prompt_digest + "\n" + cfg_.model_name + "\n" + temp);
}

std::optional<CompletionRecord> LlmGateway::cache_lookup(const std::string& key) const {
  if (cfg_.cache_dir.empty()) return std::nullopt;
  std::lock_guard lock(cache_mutex_);
  const auto path = cfg_.cache_dir / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return completion_from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void LlmGateway::cache_store(const std::string& key, const CompletionRecord& rec) const {
  if (cfg_.cache_dir.empty()) return;
  std::lock_guard lock(cache_mutex_);
  std::error_code ec;
  std::filesystem::create_directories(cfg_.cache_dir, ec);
  const auto path = cfg_.cache_dir / (key + ".json");
  const auto tmp = cfg_.cache_dir / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      spdlog::warn("cannot write cache entry {}", path.string());
      return;
    }
    out << to_json(rec).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path, ec);
}

CompletionRecord LlmGateway::complete(const PromptBundle& prompt) const { return complete(prompt, scripted_); }

CompletionRecord LlmGateway::complete(const PromptBundle& prompt, const ScriptedResponder& scripted) const {
  if (prompt.rendered.empty()) throw Error("refusing to send an empty prompt");
  CompletionRecord rec;
  rec.prompt_digest = sha256_hex(prompt.rendered);
  rec.backend = backend_;
  const std::string key = cache_key(rec.prompt_digest);
  if (auto hit = cache_lookup(key)) return *hit;

  const auto start = std::chrono::steady_clock::now();
  switch (backend_) {
    case BackendKind::kScripted:
      if (!scripted) throw ConfigError("scripted backend has no responder");
      rec.response_text = scripted(prompt);
      rec.attempt_count = 1;
      break;
    case BackendKind::kEchoNearest:
      rec.response_text = echo_nearest_backend(prompt);
      rec.attempt_count = 1;
      break;
    case BackendKind::kHttp: {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      rec.response_text = call_http(prompt, rec.attempt_count);
      break;
    }
  }
  rec.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  cache_store(key, rec);
  return rec;
}

namespace {

struct Url {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/\s]+)(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw ConfigError("invalid endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/v1/chat/completions"};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::string LlmGateway::call_http(const PromptBundle& prompt, int& attempts) const {
  if (cfg_.endpoint_url.empty()) throw ConfigError("no endpoint configured (set XICM_LLM_ENDPOINT)");
  const Url url = split_url(cfg_.endpoint_url);
  const std::string body = chat_request_body(prompt, cfg_).dump();

  httplib::Client client(url.base);
  const auto timeout = std::chrono::duration<double>(cfg_.request_timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(micros);
  client.set_read_timeout(micros);
  client.set_write_timeout(micros);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  Rng jitter(hash_bytes(body));
  int last_status = 0;
  bool last_timed_out = false;
  attempts = 0;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = cfg_.backoff_base * std::pow(2.0, attempt - 1) * jitter.uniform(0.5, 1.5);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    ++attempts;
    const auto sent = std::chrono::steady_clock::now();
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - sent).count();
      last_timed_out = err == httplib::Error::ConnectionTimeout ||
                       (err == httplib::Error::Read && waited >= 0.9 * cfg_.request_timeout);
      last_status = 0;
      spdlog::debug("attempt {} transport error: {}", attempts, httplib::to_string(err));
      continue;
    }
    last_timed_out = false;
    last_status = res->status;
    if (res->status == 401 || res->status == 403) throw AuthFailure(res->status);
    if (retryable_status(res->status)) {
      spdlog::debug("attempt {} got retryable status {}", attempts, res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw GatewayError("endpoint returned status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_null()) return {};
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(std::string("malformed chat-completions reply: ") + e.what());
    }
  }
  if (last_timed_out)
    throw GatewayTimeout("request timed out after " + std::to_string(attempts) + " attempts");
  throw ExhaustedRetries(last_status, attempts);
}

}  // namespace xicm
