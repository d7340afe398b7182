#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "xicm/digest.hpp"
#include "xicm/errors.hpp"
#include "xicm/llm_gateway.hpp"
#include "xicm/rng.hpp"

using namespace xicm;
using xicm::testing::TempDir;

namespace {

// Chat-completions stand-in on a loopback port. The handler decides the
// reply for each hit.
class MockEndpoint {
 public:
  using Handler = std::function<void(int hit, const httplib::Request&, httplib::Response&)>;

  explicit MockEndpoint(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int hit = ++hits_;
      {
        std::lock_guard lock(mutex_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      handler_(hit, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int hits() const { return hits_; }
  std::string last_body() {
    std::lock_guard lock(mutex_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

 private:
  httplib::Server server_;
  Handler handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::mutex mutex_;
  std::string last_body_, last_auth_;
};

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

void ok(httplib::Response& res, const std::string& content) { res.set_content(reply(content), "application/json"); }

PromptBundle prompt_with(std::vector<std::vector<std::array<int, 7>>> blocks) {
  PromptBundle p;
  p.system_text = "system";
  int i = 0;
  for (const auto& actions : blocks) {
    DemoBlock b;
    b.demo_id = "d" + std::to_string(i++);
    b.language = "task";
    for (const auto& a : actions) b.actions.push_back(QuantizedPose::from_components(a));
    p.demo_blocks.push_back(b);
  }
  p.query_language = "query";
  p.rendered = render_prompt(p);
  return p;
}

GatewayConfig http_config(const std::string& url) {
  GatewayConfig g;
  g.endpoint_url = url;
  g.model_name = "mock-model";
  g.api_key = "secret";
  g.backoff_base = 0.001;
  g.request_timeout = 5.0;
  return g;
}

}  // namespace

TEST_CASE("scripted backend returns the fixture verbatim") {
  LlmGateway gw({}, BackendKind::kScripted, [](const PromptBundle&) { return std::string("fixture text"); });
  const auto p = prompt_with({{{1, 2, 3, 4, 5, 6, 0}}});
  const auto rec = gw.complete(p);
  CHECK(rec.response_text == "fixture text");
  CHECK(rec.attempt_count == 1);
  CHECK(rec.backend == BackendKind::kScripted);
  CHECK(rec.prompt_digest == sha256_hex(p.rendered));
  LlmGateway none({}, BackendKind::kScripted);
  CHECK_THROWS_AS(none.complete(p), ConfigError);
}

TEST_CASE("echo_nearest copies only the first block") {
  CHECK(echo_nearest_backend(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}})) == "[1, 2, 3, 4, 5, 6, 0]");
  CHECK(echo_nearest_backend(prompt_with({{{1, 2, 3, 4, 5, 6, 0}, {7, 8, 9, 1, 2, 3, 1}}, {{9, 9, 9, 9, 9, 9, 1}}})) ==
        "[1, 2, 3, 4, 5, 6, 0]\n[7, 8, 9, 1, 2, 3, 1]");
  CHECK_THROWS_AS(echo_nearest_backend(prompt_with({})), Error);
  Rng r(61);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<std::array<int, 7>>> blocks(1 + r.below(4));
    for (auto& b : blocks) {
      b.resize(1 + r.below(6));
      for (auto& a : b)
        a = {int(r.below(100)), int(r.below(100)), int(r.below(100)), int(r.below(72)), int(r.below(72)),
             int(r.below(72)), int(r.below(2))};
    }
    const auto p = prompt_with(blocks);
    REQUIRE(parse_prediction(echo_nearest_backend(p)).actions == p.demo_blocks[0].actions);
  }
}

TEST_CASE("request body, headers and digest") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { ok(res, "[1, 2, 3, 4, 5, 6, 1]"); });
  LlmGateway gw(http_config(mock.url()), BackendKind::kHttp);
  const auto p = prompt_with({{{1, 2, 3, 4, 5, 6, 0}}});
  const auto before = p.rendered;
  const auto rec = gw.complete(p);
  CHECK(rec.response_text == "[1, 2, 3, 4, 5, 6, 1]");
  CHECK(rec.attempt_count == 1);
  CHECK(rec.backend == BackendKind::kHttp);
  CHECK(rec.prompt_digest == sha256_hex(p.rendered));
  CHECK(p.rendered == before);
  const auto body = nlohmann::json::parse(mock.last_body());
  CHECK(body["model"] == "mock-model");
  CHECK(body["temperature"] == 0.0);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][0]["content"] == "system");
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == p.user_text());
  CHECK(p.system_text + "\n\n" + body["messages"][1]["content"].get<std::string>() == p.rendered);
  CHECK(mock.last_auth() == "Bearer secret");
}

TEST_CASE("two failures then success takes three attempts") {
  MockEndpoint mock([](int hit, const httplib::Request&, httplib::Response& res) {
    if (hit <= 2) res.status = hit == 1 ? 503 : 429;
    else ok(res, "done");
  });
  LlmGateway gw(http_config(mock.url()), BackendKind::kHttp);
  const auto rec = gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}}));
  CHECK(rec.response_text == "done");
  CHECK(rec.attempt_count == 3);
  CHECK(mock.hits() == 3);
}

TEST_CASE("401 and 403 are not retried") {
  for (int status : {401, 403}) {
    MockEndpoint mock([status](int, const httplib::Request&, httplib::Response& res) { res.status = status; });
    LlmGateway gw(http_config(mock.url()), BackendKind::kHttp);
    try {
      gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}}));
      FAIL("expected AuthFailure");
    } catch (const AuthFailure& e) {
      CHECK(e.status() == status);
    }
    CHECK(mock.hits() == 1);
  }
}

TEST_CASE("other 4xx fail without retry") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { res.status = 400; });
  LlmGateway gw(http_config(mock.url()), BackendKind::kHttp);
  try {
    gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}}));
    FAIL("expected GatewayError");
  } catch (const ExhaustedRetries&) {
    FAIL("400 must not be retried");
  } catch (const GatewayError& e) {
    CHECK(std::string(e.kind()) == "GatewayError");
  }
  CHECK(mock.hits() == 1);
}

TEST_CASE("persistent 5xx exhausts the retries") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { res.status = 502; });
  auto cfg = http_config(mock.url());
  cfg.max_retries = 2;
  LlmGateway gw(cfg, BackendKind::kHttp);
  try {
    gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}}));
    FAIL("expected ExhaustedRetries");
  } catch (const ExhaustedRetries& e) {
    CHECK(e.last_status() == 502);
  }
  CHECK(mock.hits() == 3);
}

TEST_CASE("slow endpoint raises Timeout") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    ok(res, "late");
  });
  auto cfg = http_config(mock.url());
  cfg.request_timeout = 0.2;
  cfg.max_retries = 0;
  LlmGateway gw(cfg, BackendKind::kHttp);
  CHECK_THROWS_AS(gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}})), GatewayTimeout);
}

TEST_CASE("unreachable endpoint") {
  std::string url;
  {
    MockEndpoint closed([](int, const httplib::Request&, httplib::Response&) {});
    url = closed.url();
  }
  auto cfg = http_config(url);
  cfg.max_retries = 1;
  LlmGateway gw(cfg, BackendKind::kHttp);
  CHECK_THROWS_AS(gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}})), GatewayError);
}

TEST_CASE("malformed replies") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  LlmGateway gw(http_config(mock.url()), BackendKind::kHttp);
  CHECK_THROWS_AS(gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}})), GatewayError);
}

TEST_CASE("responses are cached by digest, model and temperature") {
  TempDir tmp;
  MockEndpoint mock([](int hit, const httplib::Request&, httplib::Response& res) { ok(res, "reply " + std::to_string(hit)); });
  auto cfg = http_config(mock.url());
  cfg.cache_dir = tmp / "cache";
  const auto p = prompt_with({{{1, 2, 3, 4, 5, 6, 0}}});
  {
    LlmGateway gw(cfg, BackendKind::kHttp);
    CHECK(gw.complete(p).response_text == "reply 1");
    CHECK(gw.complete(p).response_text == "reply 1");
  }
  CHECK(mock.hits() == 1);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "cache")) {
    ++files;
    const auto j = nlohmann::json::parse(xicm::testing::read_file(e.path()));
    CHECK(completion_from_json(j).response_text == "reply 1");
  }
  CHECK(files == 1);
  cfg.temperature = 0.7;
  LlmGateway warm(cfg, BackendKind::kHttp);
  CHECK(warm.complete(p).response_text == "reply 2");
}

TEST_CASE("in-flight requests stay within the limit") {
  std::atomic<int> in_flight{0}, peak{0};
  MockEndpoint mock([&](int, const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    --in_flight;
    ok(res, "x");
  });
  auto cfg = http_config(mock.url());
  cfg.max_concurrent_requests = 2;
  LlmGateway gw(cfg, BackendKind::kHttp);
  std::vector<std::thread> threads;
  std::vector<std::string> results(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] { results[i] = gw.complete(prompt_with({{{i, 2, 3, 4, 5, 6, 0}}})).response_text; });
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(std::all_of(results.begin(), results.end(), [](const std::string& s) { return s == "x"; }));
  CHECK(mock.hits() == 8);
}

TEST_CASE("config invariants, environment and backend names") {
  GatewayConfig g;
  CHECK_NOTHROW(g.validate());
  g.request_timeout = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = {};
  g.max_retries = -1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = {};
  g.max_concurrent_requests = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK_THROWS_AS(LlmGateway(g, BackendKind::kHttp), ConfigError);

  ::setenv("XICM_LLM_ENDPOINT", "http://example.invalid/v1/chat/completions", 1);
  ::setenv("XICM_LLM_MODEL", "m", 1);
  ::setenv("XICM_LLM_API_KEY", "k", 1);
  const auto env = GatewayConfig::from_environment();
  CHECK(env.endpoint_url == "http://example.invalid/v1/chat/completions");
  CHECK(env.model_name == "m");
  CHECK(env.api_key == "k");
  ::unsetenv("XICM_LLM_ENDPOINT");
  ::unsetenv("XICM_LLM_MODEL");
  ::unsetenv("XICM_LLM_API_KEY");

  CHECK(parse_backend("echo") == BackendKind::kEchoNearest);
  CHECK(parse_backend("echo_nearest") == BackendKind::kEchoNearest);
  CHECK(parse_backend("http") == BackendKind::kHttp);
  CHECK(parse_backend("scripted") == BackendKind::kScripted);
  CHECK_THROWS_AS(parse_backend("gpt"), ConfigError);

  CompletionRecord rec{"abc", "text", 0.5, 2, BackendKind::kHttp};
  const auto back = completion_from_json(to_json(rec));
  CHECK(back.prompt_digest == "abc");
  CHECK(back.attempt_count == 2);
  CHECK(back.backend == BackendKind::kHttp);
}

TEST_CASE("bad endpoint URL") {
  auto cfg = http_config("ftp://nowhere");
  LlmGateway gw(cfg, BackendKind::kHttp);
  CHECK_THROWS_AS(gw.complete(prompt_with({{{1, 2, 3, 4, 5, 6, 0}}})), ConfigError);
}
