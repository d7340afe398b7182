#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xicm/discretizer.hpp"
#include "xicm/keyframes.hpp"
#include "xicm/rng.hpp"
#include "xicm/types.hpp"

namespace xicm {

/// Constants of the kinematic tabletop. The workspace is recorded in every
/// generated dataset manifest.
struct SimParams {
  WorkspaceBounds workspace{{-0.5, -0.5, -0.1}, {0.5, 0.5, 0.9}, 100};
  double table_z = 0.0;
  double grasp_radius = 0.05;
  double region_tolerance = 0.04;
  double press_tolerance = 0.03;
  double turn_threshold_deg = 60.0;
  double slot_jitter = 0.01;
  double approach_height = 0.12;
  int image_size = 16;
  int interp_steps = 3;
  double control_dt = 0.1;  // seconds per trajectory step
};

struct Region {
  Vec3 lo{};
  Vec3 hi{};
  bool contains(const Vec3& p) const;
};

struct SimObject {
  Vec3 center{};
  Vec3 initial_center{};
  bool attached = false;
  bool fixed = false;  // fixed objects are never grasped
  bool pressable = false;
  bool turnable = false;
  double radius = 0.04;
  double half_height = 0.02;
  std::array<std::uint8_t, 3> color{255, 255, 255};
};

struct SceneState {
  std::map<std::string, SimObject> objects;
  Pose7 gripper_pose;
  std::map<std::string, Region> receptacles;
  std::set<std::string> pressed;
  std::map<std::string, double> turned_deg;
  Vec3 grasp_offset{};  // attached object center minus gripper position
  bool left_workspace = false;
  Rng rng_stream{0};

  /// Name of the attached object, if any.
  std::optional<std::string> attached() const;
  /// Ground-truth object centers, as a demonstration records them.
  std::vector<ObjectRecord> object_records() const;
};

enum class TaskLevel { kSeen, kUnseenLevel1, kUnseenLevel2 };
std::string to_string(TaskLevel level);

enum class Motion { kPickPlace, kSlide, kPress, kDisplace, kTurn };

struct ObjectSpec {
  std::string name;
  std::array<std::uint8_t, 3> color{};
  double z = 0.02;  // resting center height
  double half_height = 0.02;
  double radius = 0.04;
  bool fixed = false;
  bool pressable = false;
  bool turnable = false;
  std::vector<std::array<double, 2>> slots;  // candidate (x, y) positions
};

struct TaskSpec {
  std::string name;
  TaskLevel level = TaskLevel::kSeen;
  std::string language;
  std::string verb;
  std::vector<ObjectSpec> objects;
  Motion motion = Motion::kPickPlace;
  std::string actor;          // object the gripper acts on
  std::string target;         // receptacle object for place and slide motions
  double place_offset = 0.0;  // goal center height above the target center
  Vec3 displacement{};        // for kDisplace
  double turn_deg = 90.0;     // for kTurn
  double yaw_deg = 0.0;       // gripper yaw while working

  std::vector<std::string> object_names() const;

  /// Deterministic given the seed.
  SceneState sample_scene(std::uint64_t seed, const SimParams& params = {}) const;
  bool success(const SceneState& scene, const SimParams& params = {}) const;

  /// Reference key poses solving the task in this scene. Defined for every
  /// task so the scripted backend has a ceiling to replay.
  std::vector<Pose7> oracle_key_poses(const SceneState& scene, const SimParams& params = {}) const;

  /// Demonstration policy; only seen tasks have one. Throws Error otherwise.
  KeyActionSequence scripted_policy(const SceneState& scene, const SimParams& params = {}) const;
};

/// Pose of the gripper before any action.
Pose7 home_pose();

/// The eight seen tasks of the default suite.
const std::vector<TaskSpec>& seen_tasks();
/// Ten more seen tasks; with the core eight they form the 18-task set.
const std::vector<TaskSpec>& extended_seen_tasks();
const std::vector<TaskSpec>& unseen_level1_tasks();
const std::vector<TaskSpec>& unseen_level2_tasks();
/// Every task above, core seen first.
const std::vector<TaskSpec>& all_tasks();
/// Throws ConfigError for an unknown name.
const TaskSpec& find_task(std::string_view name);

/// Expands a task group name ("seen", "seen_full", "unseen", "level1",
/// "level2", "suite", "all") or a comma separated list of task names.
std::vector<std::string> resolve_task_names(std::string_view spec);

/// Renders the scene from above: flat-colored disks on a black table.
Image render_scene(const SceneState& scene, const SimParams& params = {});

enum class FailureReason { kNoActions, kOutOfWorkspace, kPredicateFalse, kParseFailure };
std::string to_string(FailureReason reason);
FailureReason parse_failure_reason(std::string_view name);

struct RolloutResult {
  std::string task;
  std::uint64_t episode_seed = 0;
  bool success = false;
  int steps_executed = 0;
  std::optional<FailureReason> failure_reason;
  bool operator==(const RolloutResult&) const = default;
};

/// Moves the gripper to one waypoint and applies grasp, release, press and
/// turn effects.
void apply_waypoint(SceneState& scene, const Pose7& target, const SimParams& params = {});

/// Teleports the gripper through the dequantized actions and evaluates the
/// task predicate. Failures are reported in the result, never thrown.
RolloutResult execute_actions(const TaskSpec& task, SceneState& scene, std::span<const QuantizedPose> actions,
                              const SimParams& params = {}, int gripper_open_value = 1);

/// Dense trajectory for the key poses, recorded as a demonstration.
Demonstration record_demonstration(const TaskSpec& task, const SceneState& scene, std::string id,
                                   const SimParams& params = {});

/// Samples scenes, runs the scripted policies densely and records every
/// episode. Throws Error if a scripted rollout misses its own predicate.
Dataset generate_seen_dataset(const std::vector<std::string>& task_names, int episodes_per_task,
                              std::uint64_t seed, const SimParams& params = {});

/// Scene seed used for episode `index` of `task` by generate_seen_dataset.
std::uint64_t demo_episode_seed(std::uint64_t seed, std::string_view task, int index);

}  // namespace xicm
