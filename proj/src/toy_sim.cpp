#include "xicm/toy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "xicm/errors.hpp"

namespace xicm {
namespace {

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

// Signed shortest rotation from a to b in degrees, in (-180, 180].
double angle_delta(double a, double b) {
  double d = std::fmod(b - a, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

Region box_around(const Vec3& c, double half) {
  return {{c[0] - half, c[1] - half, c[2] - half}, {c[0] + half, c[1] + half, c[2] + half}};
}

}  // namespace

bool Region::contains(const Vec3& p) const {
  for (int i = 0; i < 3; ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

std::optional<std::string> SceneState::attached() const {
  for (const auto& [name, o] : objects)
    if (o.attached) return name;
  return std::nullopt;
}

std::vector<ObjectRecord> SceneState::object_records() const {
  std::vector<ObjectRecord> out;
  for (const auto& [name, o] : objects) out.push_back({name, o.center});
  return out;
}

std::string to_string(TaskLevel level) {
  switch (level) {
    case TaskLevel::kSeen:
      return "seen";
    case TaskLevel::kUnseenLevel1:
      return "level1";
    case TaskLevel::kUnseenLevel2:
      return "level2";
  }
  return "unknown";
}

std::string to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::kNoActions:
      return "no_actions";
    case FailureReason::kOutOfWorkspace:
      return "out_of_workspace";
    case FailureReason::kPredicateFalse:
      return "predicate_false";
    case FailureReason::kParseFailure:
      return "parse_failure";
  }
  return "unknown";
}

FailureReason parse_failure_reason(std::string_view name) {
  for (auto r : {FailureReason::kNoActions, FailureReason::kOutOfWorkspace, FailureReason::kPredicateFalse,
                 FailureReason::kParseFailure})
    if (to_string(r) == name) return r;
  throw Error("unknown failure reason '" + std::string(name) + "'");
}

Pose7 home_pose() { return Pose7({0.0, 0.0, 0.45}, {0.0, 180.0, 0.0}, true); }

std::vector<std::string> TaskSpec::object_names() const {
  std::vector<std::string> out;
  for (const auto& o : objects) out.push_back(o.name);
  return out;
}

SceneState TaskSpec::sample_scene(std::uint64_t seed, const SimParams& params) const {
  SceneState s;
  s.rng_stream = Rng(seed);
  for (const auto& spec : objects) {
    if (spec.slots.empty()) throw Error("object '" + spec.name + "' of task '" + name + "' has no slots");
    const auto& slot = spec.slots[s.rng_stream.below(spec.slots.size())];
    SimObject o;
    o.center = {slot[0] + s.rng_stream.uniform(-params.slot_jitter, params.slot_jitter),
                slot[1] + s.rng_stream.uniform(-params.slot_jitter, params.slot_jitter), spec.z};
    o.initial_center = o.center;
    o.fixed = spec.fixed;
    o.pressable = spec.pressable;
    o.turnable = spec.turnable;
    o.radius = spec.radius;
    o.half_height = spec.half_height;
    o.color = spec.color;
    s.objects.emplace(spec.name, o);
  }
  s.gripper_pose = home_pose();
  switch (motion) {
    case Motion::kPickPlace:
    case Motion::kSlide: {
      Vec3 goal = s.objects.at(target).center;
      goal[2] += place_offset;
      s.receptacles.emplace("goal", box_around(goal, params.region_tolerance));
      break;
    }
    case Motion::kDisplace:
      s.receptacles.emplace("goal", box_around(add(s.objects.at(actor).center, displacement), params.region_tolerance));
      break;
    case Motion::kPress:
    case Motion::kTurn:
      break;
  }
  return s;
}

bool TaskSpec::success(const SceneState& scene, const SimParams& params) const {
  const auto it = scene.objects.find(actor);
  if (it == scene.objects.end()) return false;
  const SimObject& a = it->second;
  switch (motion) {
    case Motion::kPickPlace:
    case Motion::kSlide:
    case Motion::kDisplace:
      return !a.attached && scene.receptacles.at("goal").contains(a.center);
    case Motion::kPress:
      return scene.pressed.count(actor) > 0;
    case Motion::kTurn: {
      auto t = scene.turned_deg.find(actor);
      return t != scene.turned_deg.end() && t->second >= params.turn_threshold_deg;
    }
  }
  return false;
}

std::vector<Pose7> TaskSpec::oracle_key_poses(const SceneState& scene, const SimParams& params) const {
  const Vec3 rpy{0.0, 180.0, yaw_deg};
  const double up = params.approach_height;
  const Vec3 a = scene.objects.at(actor).center;
  auto at = [&](const Vec3& p, bool open, double dz = 0.0, const Vec3& r = {0.0, 180.0, 0.0}) {
    return Pose7({p[0], p[1], p[2] + dz}, r, open);
  };
  std::vector<Pose7> k;
  switch (motion) {
    case Motion::kPickPlace: {
      const Vec3 g = scene.receptacles.at("goal").lo;
      const Vec3 goal{g[0] + params.region_tolerance, g[1] + params.region_tolerance, g[2] + params.region_tolerance};
      k = {at(a, true, up, rpy),    at(a, true, 0, rpy),       at(a, false, 0, rpy),    at(a, false, up, rpy),
           at(goal, false, up, rpy), at(goal, false, 0, rpy), at(goal, true, 0, rpy), at(goal, true, up, rpy)};
      break;
    }
    case Motion::kSlide: {
      const Vec3 g = scene.receptacles.at("goal").lo;
      const Vec3 goal{g[0] + params.region_tolerance, g[1] + params.region_tolerance, a[2]};
      k = {at(a, true, up, rpy),   at(a, true, 0, rpy),    at(a, false, 0, rpy),
           at(goal, false, 0, rpy), at(goal, true, 0, rpy), at(goal, true, up, rpy)};
      break;
    }
    case Motion::kPress: {
      const Vec3 top{a[0], a[1], a[2] + scene.objects.at(actor).half_height};
      k = {at(top, true, up, rpy), at(top, false, up, rpy), at(top, false, 0, rpy), at(top, false, up, rpy)};
      break;
    }
    case Motion::kDisplace: {
      const Vec3 b = add(a, displacement);
      k = {at(a, true, up, rpy), at(a, true, 0, rpy),  at(a, false, 0, rpy),
           at(b, false, 0, rpy), at(b, true, 0, rpy), at(b, true, up, rpy)};
      break;
    }
    case Motion::kTurn: {
      const Vec3 turned{0.0, 180.0, yaw_deg + turn_deg};
      k = {at(a, true, up, rpy),      at(a, true, 0, rpy),      at(a, false, 0, rpy),
           at(a, false, 0, turned),   at(a, true, 0, turned),   at(a, true, up, turned)};
      break;
    }
  }
  return k;
}

KeyActionSequence TaskSpec::scripted_policy(const SceneState& scene, const SimParams& params) const {
  if (level != TaskLevel::kSeen) throw Error("task '" + name + "' has no demonstration policy");
  return extract_keyframes(record_demonstration(*this, scene, name, params));
}

Image render_scene(const SceneState& scene, const SimParams& params) {
  const int n = params.image_size;
  const auto& ws = params.workspace;
  constexpr int kSuper = 4;
  std::vector<double> buf(static_cast<std::size_t>(n) * n * 3, 0.0);

  std::vector<std::pair<std::string, const SimObject*>> order;
  for (const auto& [name, o] : scene.objects) order.emplace_back(name, &o);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second->center[2] < b.second->center[2]; });

  const double wx = (ws.max_xyz[0] - ws.min_xyz[0]) / n;
  const double wy = (ws.max_xyz[1] - ws.min_xyz[1]) / n;
  for (const auto& [name, o] : order) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            const double x = ws.min_xyz[0] + (c + (sx + 0.5) / kSuper) * wx;
            const double y = ws.max_xyz[1] - (r + (sy + 0.5) / kSuper) * wy;
            const double dx = x - o->center[0], dy = y - o->center[1];
            if (dx * dx + dy * dy <= o->radius * o->radius) ++hits;
          }
        }
        if (hits == 0) continue;
        const double cover = static_cast<double>(hits) / (kSuper * kSuper);
        for (int ch = 0; ch < 3; ++ch) {
          double& px = buf[(static_cast<std::size_t>(r) * n + c) * 3 + ch];
          px = px * (1.0 - cover) + o->color[ch] * cover;
        }
      }
    }
  }
  Image img;
  img.width = n;
  img.height = n;
  img.data.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(buf[i]), 0L, 255L));
  return img;
}

void apply_waypoint(SceneState& scene, const Pose7& target, const SimParams& params) {
  const Pose7 prev = scene.gripper_pose;
  scene.gripper_pose = target;
  const Vec3& g = target.position();
  if (g[2] < params.table_z - 1e-9) scene.left_workspace = true;

  if (auto held = scene.attached()) scene.objects.at(*held).center = add(g, scene.grasp_offset);

  if (prev.gripper_open() && !target.gripper_open()) {
    const SimObject* best = nullptr;
    std::string best_name;
    double best_d = params.grasp_radius;
    for (auto& [name, o] : scene.objects) {
      if (o.fixed) continue;
      const double d = dist(g, o.center);
      if (d <= best_d) {
        best_d = d;
        best = &o;
        best_name = name;
      }
    }
    if (best) {
      SimObject& o = scene.objects.at(best_name);
      o.attached = true;
      scene.grasp_offset = {o.center[0] - g[0], o.center[1] - g[1], o.center[2] - g[2]};
    }
  } else if (!prev.gripper_open() && target.gripper_open()) {
    for (auto& [name, o] : scene.objects) o.attached = false;
    scene.grasp_offset = {0.0, 0.0, 0.0};
  }

  if (!target.gripper_open()) {
    for (const auto& [name, o] : scene.objects) {
      if (!o.pressable) continue;
      const Vec3 top{o.center[0], o.center[1], o.center[2] + o.half_height};
      if (dist(g, top) <= params.press_tolerance) scene.pressed.insert(name);
    }
    if (!prev.gripper_open()) {
      for (const auto& [name, o] : scene.objects) {
        if (!o.turnable) continue;
        if (dist(prev.position(), o.center) <= params.grasp_radius && dist(g, o.center) <= params.grasp_radius)
          scene.turned_deg[name] += std::abs(angle_delta(prev.rpy()[2], target.rpy()[2]));
      }
    }
  }
}

RolloutResult execute_actions(const TaskSpec& task, SceneState& scene, std::span<const QuantizedPose> actions,
                              const SimParams& params, int gripper_open_value) {
  RolloutResult r;
  r.task = task.name;
  if (actions.empty()) {
    r.failure_reason = FailureReason::kNoActions;
    return r;
  }
  for (const auto& a : actions) {
    QuantizedPose q = a;
    if (gripper_open_value == 0) q.gripper = 1 - q.gripper;
    apply_waypoint(scene, dequantize_pose(q, params.workspace), params);
    ++r.steps_executed;
    if (scene.left_workspace) {
      r.failure_reason = FailureReason::kOutOfWorkspace;
      return r;
    }
  }
  r.success = task.success(scene, params);
  if (!r.success) r.failure_reason = FailureReason::kPredicateFalse;
  return r;
}

Demonstration record_demonstration(const TaskSpec& task, const SceneState& initial, std::string id,
                                   const SimParams& params) {
  static constexpr double kLinCoef[7] = {0.9, -0.6, 0.4, 1.0, -0.3, 0.7, 0.2};
  static constexpr double kAngCoef[7] = {0.1, 0.1, 0.0, 0.2, 0.3, 0.5, 1.0};
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

  SceneState scene = initial;
  Demonstration demo;
  demo.id = std::move(id);
  demo.task_name = task.name;
  demo.language = task.language;
  demo.objects = scene.object_records();

  auto record = [&](const Pose7& pose, double lin_speed, double ang_speed) {
    Observation obs;
    obs.timestep = static_cast<std::int64_t>(demo.actions.size());
    obs.gripper_open = pose.gripper_open();
    obs.joint_velocities.resize(7);
    for (int j = 0; j < 7; ++j) obs.joint_velocities[j] = kLinCoef[j] * lin_speed + kAngCoef[j] * ang_speed;
    obs.rgb = render_scene(scene, params);
    demo.observations.push_back(std::move(obs));
    demo.actions.push_back(pose);
  };

  Pose7 prev = scene.gripper_pose;
  record(prev, 0.0, 0.0);
  for (const Pose7& key : task.oracle_key_poses(initial, params)) {
    if (key.position() == prev.position() && key.rpy() == prev.rpy()) {
      apply_waypoint(scene, key, params);
      record(key, 0.0, 0.0);
      prev = key;
      continue;
    }
    const int n = params.interp_steps + 1;
    Pose7 last = prev;
    for (int i = 1; i <= n; ++i) {
      const double f = static_cast<double>(i) / n;
      Vec3 p, rpy;
      for (int ax = 0; ax < 3; ++ax) {
        p[ax] = prev.position()[ax] + f * (key.position()[ax] - prev.position()[ax]);
        rpy[ax] = prev.rpy()[ax] + f * angle_delta(prev.rpy()[ax], key.rpy()[ax]);
      }
      // The arrival step lands exactly on the key pose.
      Pose7 step = i == n ? key : Pose7(p, rpy, prev.gripper_open());
      double ang = 0.0;
      for (int ax = 0; ax < 3; ++ax) ang = std::max(ang, std::abs(angle_delta(last.rpy()[ax], step.rpy()[ax])));
      apply_waypoint(scene, step, params);
      record(step, dist(last.position(), step.position()) / params.control_dt, ang * kDegToRad / params.control_dt);
      last = step;
    }
    record(key, 0.0, 0.0);  // dwell
    prev = key;
  }
  if (!task.success(scene, params)) throw Error("scripted rollout of '" + task.name + "' missed its own goal");
  return demo;
}

std::uint64_t demo_episode_seed(std::uint64_t seed, std::string_view task, int index) {
  return derive_seed(seed, task, static_cast<std::uint64_t>(index));
}

Dataset generate_seen_dataset(const std::vector<std::string>& task_names, int episodes_per_task, std::uint64_t seed,
                              const SimParams& params) {
  if (episodes_per_task < 1) throw ConfigError("episodes per task must be positive");
  Dataset d;
  d.workspace = params.workspace;
  d.extras.grasp_radius = params.grasp_radius;
  d.extras.region_tolerance = params.region_tolerance;
  for (const auto& name : task_names) {
    const TaskSpec& task = find_task(name);
    if (task.level != TaskLevel::kSeen) throw ConfigError("task '" + name + "' is not a seen task");
    d.tasks.push_back(task.name);
    for (int e = 0; e < episodes_per_task; ++e) {
      char id[32];
      std::snprintf(id, sizeof id, "-%04d", e);
      SceneState scene = task.sample_scene(demo_episode_seed(seed, task.name, e), params);
      d.demos.push_back(record_demonstration(task, scene, task.name + id, params));
    }
  }
  std::sort(d.demos.begin(), d.demos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return d;
}

}  // namespace xicm
