#include <algorithm>
#include <set>

#include "doctest.h"
#include "xicm/discretizer.hpp"
#include "xicm/errors.hpp"
#include "xicm/keyframes.hpp"
#include "xicm/pipeline.hpp"
#include "xicm/prompt.hpp"
#include "xicm/toy_sim.hpp"

using namespace xicm;

namespace {

std::vector<QuantizedPose> quantized(const std::vector<Pose7>& poses, const SimParams& p) {
  std::vector<QuantizedPose> out;
  for (const auto& pose : poses) out.push_back(quantize_pose(pose, p.workspace));
  return out;
}

std::vector<QuantizedPose> quantized(const KeyActionSequence& ka, const SimParams& p) {
  std::vector<QuantizedPose> out;
  for (const auto& k : ka.keyframes) out.push_back(quantize_pose(k.action, p.workspace));
  return out;
}

std::set<std::string> seen_objects() {
  std::set<std::string> s;
  for (const auto& n : resolve_task_names("seen_full"))
    for (const auto& o : find_task(n).object_names()) s.insert(o);
  return s;
}

std::set<std::string> seen_verbs() {
  std::set<std::string> s;
  for (const auto& n : resolve_task_names("seen_full")) s.insert(find_task(n).verb);
  return s;
}

}  // namespace

TEST_CASE("task groups") {
  CHECK(resolve_task_names("seen").size() == 8);
  CHECK(resolve_task_names("seen_full").size() == 18);
  CHECK(resolve_task_names("level1").size() == 4);
  CHECK(resolve_task_names("level2").size() == 3);
  CHECK(resolve_task_names("unseen").size() == 7);
  CHECK(resolve_task_names("suite").size() == 15);
  CHECK(resolve_task_names("all").size() == 25);
  CHECK(resolve_task_names("push_button,turn_tap") == std::vector<std::string>{"push_button", "turn_tap"});
  CHECK_THROWS_AS(resolve_task_names("nope"), ConfigError);
  CHECK_THROWS_AS(find_task("nope"), ConfigError);
  std::set<std::string> names;
  for (const auto& t : all_tasks()) names.insert(t.name);
  CHECK(names.size() == all_tasks().size());
}

TEST_CASE("level partition follows the shared-vocabulary rules") {
  const auto objects = seen_objects();
  const auto verbs = seen_verbs();
  for (const auto& t : unseen_level1_tasks()) {
    CAPTURE(t.name);
    CHECK(t.level == TaskLevel::kUnseenLevel1);
    const auto names = t.object_names();
    const bool shares_object = std::any_of(names.begin(), names.end(), [&](const auto& n) { return objects.count(n); });
    CHECK((shares_object || verbs.count(t.verb)));
  }
  for (const auto& t : unseen_level2_tasks()) {
    CAPTURE(t.name);
    CHECK(t.level == TaskLevel::kUnseenLevel2);
    for (const auto& n : t.object_names()) CHECK(objects.count(n) == 0);
    CHECK(verbs.count(t.verb) == 0);
  }
  for (const auto& t : all_tasks()) {
    CAPTURE(t.name);
    CHECK(t.language.find(t.verb) != std::string::npos);
  }
}

TEST_CASE("scripted policies solve every seen task") {
  const SimParams p;
  for (const auto& name : resolve_task_names("seen_full")) {
    const auto& task = find_task(name);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      CAPTURE(name);
      CAPTURE(seed);
      const auto scene = task.sample_scene(seed, p);
      REQUIRE_FALSE(task.success(scene, p));
      auto s = scene;
      const auto r = execute_actions(task, s, quantized(task.scripted_policy(scene, p), p), p);
      REQUIRE(r.success);
      CHECK_FALSE(r.failure_reason.has_value());
    }
  }
}

TEST_CASE("oracle key poses solve every task, unseen included") {
  const SimParams p;
  for (const auto& task : all_tasks()) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
      CAPTURE(task.name);
      CAPTURE(seed);
      auto scene = task.sample_scene(seed, p);
      const auto r = execute_actions(task, scene, quantized(task.oracle_key_poses(scene, p), p), p);
      REQUIRE(r.success);
    }
  }
  CHECK_THROWS_AS(find_task("turn_tap").scripted_policy(find_task("turn_tap").sample_scene(1), p), Error);
}

TEST_CASE("scripted reply text round-trips through the parser into success") {
  const SimParams p;
  for (const auto& name : resolve_task_names("suite")) {
    const auto& task = find_task(name);
    auto scene = task.sample_scene(3, p);
    const auto text = oracle_response(task, scene, p);
    const auto pred = parse_prediction(text);
    CHECK(execute_actions(task, scene, pred.actions, p).success);
  }
}

TEST_CASE("inverted gripper polarity") {
  const SimParams p;
  const auto& task = find_task("stack_block");
  const auto scene = task.sample_scene(5, p);
  auto flipped = quantized(task.oracle_key_poses(scene, p), p);
  for (auto& q : flipped) q.gripper = 1 - q.gripper;
  auto s = scene;
  CHECK(execute_actions(task, s, flipped, p, 0).success);
  s = scene;
  CHECK_FALSE(execute_actions(task, s, flipped, p, 1).success);
}

TEST_CASE("scenes and rollouts are deterministic") {
  const SimParams p;
  for (const auto& task : all_tasks()) {
    const auto a = task.sample_scene(42, p);
    const auto b = task.sample_scene(42, p);
    CHECK(render_scene(a, p) == render_scene(b, p));
    CHECK(a.object_records() == b.object_records());
    auto sa = a, sb = b;
    const auto acts = quantized(task.oracle_key_poses(a, p), p);
    CHECK(execute_actions(task, sa, acts, p) == execute_actions(task, sb, acts, p));
  }
  const auto& t = find_task("put_block_in_bin");
  std::set<std::vector<double>> layouts;
  for (std::uint64_t s = 0; s < 30; ++s) {
    std::vector<double> centers;
    for (const auto& o : t.sample_scene(s, p).object_records())
      centers.insert(centers.end(), o.center_xyz.begin(), o.center_xyz.end());
    layouts.insert(centers);
  }
  CHECK(layouts.size() > 1);
}

TEST_CASE("failure reasons") {
  const SimParams p;
  const auto& task = find_task("push_button");
  auto scene = task.sample_scene(1, p);
  auto r = execute_actions(task, scene, std::vector<QuantizedPose>{}, p);
  CHECK_FALSE(r.success);
  CHECK(r.failure_reason == FailureReason::kNoActions);
  CHECK(r.steps_executed == 0);

  scene = task.sample_scene(1, p);
  const std::vector<QuantizedPose> dive{QuantizedPose::from_components({50, 50, 0, 0, 36, 0, 1}),
                                        QuantizedPose::from_components({50, 50, 50, 0, 36, 0, 1})};
  r = execute_actions(task, scene, dive, p);
  CHECK(r.failure_reason == FailureReason::kOutOfWorkspace);
  CHECK(r.steps_executed == 1);

  scene = task.sample_scene(1, p);
  r = execute_actions(task, scene, std::vector{QuantizedPose::from_components({50, 50, 80, 0, 36, 0, 1})}, p);
  CHECK(r.failure_reason == FailureReason::kPredicateFalse);
  CHECK(r.steps_executed == 1);

  for (auto f : {FailureReason::kNoActions, FailureReason::kOutOfWorkspace, FailureReason::kPredicateFalse,
                 FailureReason::kParseFailure})
    CHECK(parse_failure_reason(to_string(f)) == f);
}

TEST_CASE("at most one object is attached and it follows the gripper") {
  const SimParams p;
  for (const auto& task : all_tasks()) {
    auto scene = task.sample_scene(9, p);
    for (const auto& pose : task.oracle_key_poses(scene, p)) {
      apply_waypoint(scene, dequantize_pose(quantize_pose(pose, p.workspace), p.workspace), p);
      int attached = 0;
      for (const auto& [name, obj] : scene.objects) {
        if (!obj.attached) continue;
        ++attached;
        CHECK_FALSE(obj.fixed);
        for (int i = 0; i < 3; ++i)
          CHECK(obj.center[i] == doctest::Approx(scene.gripper_pose.position()[i] + scene.grasp_offset[i]));
      }
      CHECK(attached <= 1);
      if (!scene.gripper_pose.gripper_open()) continue;
      CHECK_FALSE(scene.attached().has_value());
    }
  }
}

TEST_CASE("recorded demonstrations have consistent lengths and keyframes") {
  const SimParams p;
  const auto ds = generate_seen_dataset(resolve_task_names("seen_full"), 20, 7, p);
  CHECK(ds.size() == 360);
  std::map<std::string, int> per_task;
  for (const auto& d : ds.demos) {
    ++per_task[d.task_name];
    REQUIRE(d.observations.size() == d.actions.size());
    CHECK(d.observations[0].rgb.width == p.image_size);
    const auto ka = extract_keyframes(d);
    CHECK_FALSE(ka.keyframes.empty());
    CHECK(ka.keyframes.back().timestep == static_cast<std::int64_t>(d.length()) - 1);
  }
  CHECK(per_task.size() == 18);
  for (const auto& [name, n] : per_task) CHECK(n == 20);
  CHECK(generate_seen_dataset({"push_button"}, 3, 7, p) == generate_seen_dataset({"push_button"}, 3, 7, p));
  CHECK_THROWS_AS(generate_seen_dataset({"turn_tap"}, 1, 7, p), Error);
}

TEST_CASE("keyframe replay of a recorded demo succeeds") {
  const SimParams p;
  for (const auto& name : resolve_task_names("seen")) {
    const auto& task = find_task(name);
    for (int i = 0; i < 5; ++i) {
      const auto scene = task.sample_scene(demo_episode_seed(7, name, i), p);
      const auto demo = record_demonstration(task, scene, "x", p);
      auto s = scene;
      CAPTURE(name);
      CHECK(execute_actions(task, s, quantized(extract_keyframes(demo), p), p).success);
    }
  }
}

TEST_CASE("render draws objects on a black table") {
  const SimParams p;
  const auto& task = find_task("push_button");
  const auto img = render_scene(task.sample_scene(1, p), p);
  CHECK(img.width == p.image_size);
  CHECK(img.height == p.image_size);
  CHECK(img.data.size() == static_cast<std::size_t>(3 * p.image_size * p.image_size));
  CHECK(std::count(img.data.begin(), img.data.end(), 0) > 0);
  CHECK(std::any_of(img.data.begin(), img.data.end(), [](std::uint8_t v) { return v > 0; }));
}
