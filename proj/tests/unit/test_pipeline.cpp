#include <algorithm>
#include <set>

#include "doctest.h"
#include "pipeline_fixture.hpp"
#include "xicm/errors.hpp"

using namespace xicm;
using xicm::testing::small_pipeline;

namespace {

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("selection modes") {
  CHECK(parse_selection_mode("dynamics") == SelectionMode::kDynamics);
  CHECK(parse_selection_mode("random") == SelectionMode::kRandom);
  CHECK_THROWS_AS(parse_selection_mode("best"), ConfigError);
  CHECK(to_string(SelectionMode::kRandom) == "random");
}

TEST_CASE("pool is aligned with the dataset") {
  const auto& p = small_pipeline();
  REQUIRE(p.pool().features.size() == p.dataset().size());
  for (std::size_t i = 0; i < p.dataset().size(); ++i) CHECK(p.pool().features[i].demo_id == p.dataset().demos[i].id);
  CHECK(p.keyframes().size() == p.dataset().size());

  auto shuffled = p.pool();
  std::reverse(shuffled.features.begin(), shuffled.features.end());
  Pipeline q(p.dataset(), p.predictor(), shuffled);
  CHECK(q.pool().features == p.pool().features);

  auto missing = p.pool();
  missing.features.pop_back();
  CHECK_THROWS_AS(Pipeline(p.dataset(), p.predictor(), missing), Error);
}

TEST_CASE("scripted episodes succeed and are deterministic") {
  const auto& p = small_pipeline();
  LlmGateway gw({}, BackendKind::kScripted);
  EpisodeOptions opts{4, SelectionMode::kDynamics};
  for (const auto& name : resolve_task_names("suite")) {
    const auto& task = find_task(name);
    const auto a = p.run_episode(task, 11, gw, opts);
    const auto b = p.run_episode(task, 11, gw, opts);
    CAPTURE(name);
    CHECK(a.result.success);
    CHECK(a.result == b.result);
    CHECK(a.prompt.rendered == b.prompt.rendered);
    CHECK(a.selection.indices == b.selection.indices);
    CHECK(a.prompt.demo_blocks.size() == 4);
    CHECK(a.result.episode_seed == 11);
  }
}

TEST_CASE("prose replies are parse failures") {
  const auto& p = small_pipeline();
  LlmGateway gw({}, BackendKind::kScripted);
  EpisodeResponder prose = [](const TaskSpec&, const SceneState&, const PromptBundle&) {
    return std::string("I would move the gripper toward the object.");
  };
  const auto tr = p.run_episode(find_task("push_button"), 1, gw, {4, SelectionMode::kDynamics}, prose);
  CHECK_FALSE(tr.result.success);
  CHECK(tr.result.failure_reason == FailureReason::kParseFailure);
  CHECK_FALSE(tr.prediction.has_value());
}

TEST_CASE("random selection is seeded, sized K and covers the pool at K = N") {
  const auto& p = small_pipeline();
  const auto& task = find_task("stack_block");
  LlmGateway gw({}, BackendKind::kEchoNearest);
  const std::size_t n = p.dataset().size();
  const auto a = p.run_episode(task, 5, gw, {n, SelectionMode::kRandom});
  const auto b = p.run_episode(task, 5, gw, {n, SelectionMode::kDynamics});
  CHECK(as_set(a.selection.indices) == as_set(b.selection.indices));
  CHECK(a.selection.indices == b.selection.indices);  // same scores, same order

  std::set<std::vector<std::size_t>> picks;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto tr = p.run_episode(task, seed, gw, {3, SelectionMode::kRandom});
    REQUIRE(tr.selection.indices.size() == 3);
    REQUIRE(as_set(tr.selection.indices).size() == 3);
    REQUIRE(std::is_sorted(tr.selection.scores.rbegin(), tr.selection.scores.rend()));
    picks.insert(tr.selection.indices);
  }
  CHECK(picks.size() > 1);
  CHECK_THROWS_AS(p.run_episode(task, 1, gw, {n + 1, SelectionMode::kRandom}), RangeError);
  CHECK_THROWS_AS(p.run_episode(task, 1, gw, {0, SelectionMode::kDynamics}), RangeError);
}

TEST_CASE("both selection arms see the same scene for a seed") {
  const auto& p = small_pipeline();
  LlmGateway gw({}, BackendKind::kEchoNearest);
  const auto& task = find_task("put_block_on_shelf");
  const auto a = p.run_episode(task, 77, gw, {4, SelectionMode::kDynamics});
  const auto b = p.run_episode(task, 77, gw, {4, SelectionMode::kRandom});
  CHECK(a.query_feature == b.query_feature);
  CHECK(a.prompt.query_objects == b.prompt.query_objects);
}

TEST_CASE("echo backend replays the top demonstration's key-actions") {
  const auto& p = small_pipeline();
  LlmGateway gw({}, BackendKind::kEchoNearest);
  const auto tr = p.run_episode(find_task("push_button"), 3, gw, {2, SelectionMode::kDynamics});
  REQUIRE(tr.prediction.has_value());
  CHECK(tr.prediction->actions == tr.prompt.demo_blocks[0].actions);
}

TEST_CASE("gateway failures carry the task and seed") {
  const auto& p = small_pipeline();
  GatewayConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.model_name = "m";
  cfg.max_retries = 0;
  cfg.request_timeout = 1.0;
  LlmGateway gw(cfg, BackendKind::kHttp);
  try {
    p.run_episode(find_task("push_button"), 123, gw, {2, SelectionMode::kDynamics});
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    const std::string what = e.what();
    CHECK(what.find("push_button") != std::string::npos);
    CHECK(what.find("123") != std::string::npos);
  }
}
