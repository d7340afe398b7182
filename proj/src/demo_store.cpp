#include "xicm/demo_store.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "xicm/digest.hpp"
#include "xicm/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace xicm {
namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kMemory = "<memory>";

// Cursor over one JSON record that reports failures with file/line/field.
struct Ctx {
  const std::string& file;
  std::size_t line;

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw SchemaError(file, line, field, what);
  }

  const json& at(const json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
    return *it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
  }

  Vec3 vec3(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
  }

  std::int64_t integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
  }
};

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json manifest_to_json(const Dataset& d) {
  return json{
      {"workspace",
       {{"min", vec3_json(d.workspace.min_xyz)},
        {"max", vec3_json(d.workspace.max_xyz)},
        {"grid", d.workspace.grid_resolution}}},
      {"tasks", d.tasks},
      {"conventions", {{"gripper_open", d.extras.gripper_open_value}}},
      {"sim",
       {{"grasp_radius", d.extras.grasp_radius},
        {"region_tolerance", d.extras.region_tolerance}}},
  };
}

json episode_to_json(const Demonstration& demo) {
  json objects = json::array();
  for (const auto& o : demo.objects) objects.push_back({{"name", o.name}, {"center", vec3_json(o.center_xyz)}});
  json steps = json::array();
  for (std::size_t t = 0; t < demo.length(); ++t) {
    const auto& obs = demo.observations[t];
    const auto& act = demo.actions[t];
    steps.push_back({
        {"t", obs.timestep},
        {"rgb", {{"w", obs.rgb.width}, {"h", obs.rgb.height}, {"data_b64", base64_encode(obs.rgb.data)}}},
        {"joint_vel", obs.joint_velocities},
        {"gripper_open", obs.gripper_open},
        {"action",
         {{"pos", vec3_json(act.position())},
          {"rpy", vec3_json(act.rpy())},
          {"gripper_open", act.gripper_open()}}},
    });
  }
  return json{{"id", demo.id},
              {"task", demo.task_name},
              {"language", demo.language},
              {"objects", std::move(objects)},
              {"steps", std::move(steps)}};
}

Dataset manifest_from_json(const json& j, const std::string& file) {
  Ctx c{file, 1};
  Dataset d;
  const json& ws = c.at(j, "workspace", "");
  d.workspace.min_xyz = c.vec3(c.at(ws, "min", "workspace"), "workspace.min");
  d.workspace.max_xyz = c.vec3(c.at(ws, "max", "workspace"), "workspace.max");
  if (ws.contains("grid")) {
    d.workspace.grid_resolution = static_cast<int>(c.integer(ws["grid"], "workspace.grid"));
  }
  try {
    d.workspace.validate();
  } catch (const RangeError& e) {
    c.fail("workspace", e.what());
  }
  const json& tasks = c.at(j, "tasks", "");
  if (!tasks.is_array()) c.fail("tasks", "expected an array of task names");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto name = c.string(tasks[i], "tasks[" + std::to_string(i) + "]");
    if (name.empty() || name.find('/') != std::string::npos) c.fail("tasks", "invalid task name '" + name + "'");
    if (!seen.insert(name).second) c.fail("tasks", "duplicate task '" + name + "'");
    d.tasks.push_back(std::move(name));
  }
  if (j.contains("conventions") && j["conventions"].contains("gripper_open")) {
    auto v = c.integer(j["conventions"]["gripper_open"], "conventions.gripper_open");
    if (v != 0 && v != 1) c.fail("conventions.gripper_open", "must be 0 or 1");
    d.extras.gripper_open_value = static_cast<int>(v);
  }
  if (j.contains("sim")) {
    const json& sim = j["sim"];
    if (sim.contains("grasp_radius")) d.extras.grasp_radius = c.number(sim["grasp_radius"], "sim.grasp_radius");
    if (sim.contains("region_tolerance"))
      d.extras.region_tolerance = c.number(sim["region_tolerance"], "sim.region_tolerance");
  }
  return d;
}

Demonstration episode_from_json(const json& j, const Ctx& c) {
  Demonstration demo;
  demo.id = c.string(c.at(j, "id", ""), "id");
  if (demo.id.empty()) c.fail("id", "must be non-empty");
  demo.task_name = c.string(c.at(j, "task", ""), "task");
  demo.language = c.string(c.at(j, "language", ""), "language");

  const json& objects = c.at(j, "objects", "");
  if (!objects.is_array()) c.fail("objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    std::string path = "objects[" + std::to_string(i) + "]";
    ObjectRecord rec;
    rec.name = normalize_object_name(c.string(c.at(objects[i], "name", path), path + ".name"));
    if (rec.name.empty()) c.fail(path + ".name", "must be non-empty");
    rec.center_xyz = c.vec3(c.at(objects[i], "center", path), path + ".center");
    demo.objects.push_back(std::move(rec));
  }

  const json& steps = c.at(j, "steps", "");
  if (!steps.is_array()) c.fail("steps", "expected an array");
  demo.observations.reserve(steps.size());
  demo.actions.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::string path = "steps[" + std::to_string(i) + "]";
    const json& s = steps[i];
    Observation obs;
    obs.timestep = c.integer(c.at(s, "t", path), path + ".t");
    const json& rgb = c.at(s, "rgb", path);
    obs.rgb.width = static_cast<int>(c.integer(c.at(rgb, "w", path + ".rgb"), path + ".rgb.w"));
    obs.rgb.height = static_cast<int>(c.integer(c.at(rgb, "h", path + ".rgb"), path + ".rgb.h"));
    try {
      obs.rgb.data = base64_decode(c.string(c.at(rgb, "data_b64", path + ".rgb"), path + ".rgb.data_b64"));
    } catch (const FormatError& e) {
      c.fail(path + ".rgb.data_b64", e.what());
    }
    const json& jv = c.at(s, "joint_vel", path);
    if (!jv.is_array()) c.fail(path + ".joint_vel", "expected an array");
    for (std::size_t k = 0; k < jv.size(); ++k)
      obs.joint_velocities.push_back(c.number(jv[k], path + ".joint_vel[" + std::to_string(k) + "]"));
    obs.gripper_open = c.boolean(c.at(s, "gripper_open", path), path + ".gripper_open");
    demo.observations.push_back(std::move(obs));

    // A step without an action leaves the action list short; the length
    // check below reports it.
    if (!s.contains("action")) continue;
    const json& a = s["action"];
    std::string apath = path + ".action";
    demo.actions.emplace_back(c.vec3(c.at(a, "pos", apath), apath + ".pos"),
                              c.vec3(c.at(a, "rpy", apath), apath + ".rpy"),
                              c.boolean(c.at(a, "gripper_open", apath), apath + ".gripper_open"));
  }
  return demo;
}

void validate_demo(const Demonstration& demo, const Ctx& c) {
  if (demo.observations.size() != demo.actions.size()) {
    c.fail("steps", "length mismatch: " + std::to_string(demo.observations.size()) + " observations vs " +
                        std::to_string(demo.actions.size()) + " actions");
  }
  if (demo.length() < 2) c.fail("steps", "a demonstration needs at least 2 steps");
  for (std::size_t i = 0; i < demo.observations.size(); ++i) {
    const auto& obs = demo.observations[i];
    std::string path = "steps[" + std::to_string(i) + "]";
    if (obs.timestep < 0) c.fail(path + ".t", "must be non-negative");
    if (i > 0 && obs.timestep <= demo.observations[i - 1].timestep) c.fail(path + ".t", "timesteps must strictly increase");
    if (obs.rgb.width <= 0 || obs.rgb.height <= 0) c.fail(path + ".rgb", "width and height must be positive");
    if (static_cast<std::size_t>(obs.rgb.width) * static_cast<std::size_t>(obs.rgb.height) * 3 != obs.rgb.data.size())
      c.fail(path + ".rgb.data_b64", "buffer length does not equal w*h*3");
    for (double v : obs.joint_velocities)
      if (!std::isfinite(v)) c.fail(path + ".joint_vel", "must be finite");
  }
  for (std::size_t i = 0; i < demo.objects.size(); ++i) {
    const auto& o = demo.objects[i];
    std::string path = "objects[" + std::to_string(i) + "]";
    if (o.name.empty() || o.name != normalize_object_name(o.name)) c.fail(path + ".name", "must be non-empty lowercase");
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate_dataset(const Dataset& dataset) {
  const std::string file = kMemory;
  Ctx mc{file, 0};
  try {
    dataset.workspace.validate();
  } catch (const RangeError& e) {
    mc.fail("workspace", e.what());
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < dataset.demos.size(); ++i) {
    const auto& d = dataset.demos[i];
    Ctx c{file, i + 1};
    if (d.id.empty()) c.fail("id", "must be non-empty");
    if (!ids.insert(d.id).second) c.fail("id", "duplicate demonstration id '" + d.id + "'");
    validate_demo(d, c);
  }
}

Dataset load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / kManifestName;
  if (!fs::exists(manifest_path)) throw IoError("missing manifest: " + manifest_path.string());
  const std::string manifest_file = manifest_path.string();
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw SchemaError(manifest_file, 1, "<document>", e.what());
  }
  Dataset d = manifest_from_json(manifest, manifest_file);

  std::map<std::string, std::string> id_origin;
  for (const auto& task : d.tasks) {
    const fs::path path = root / (task + ".jsonl");
    if (!fs::exists(path)) throw IoError("missing episode file for task '" + task + "': " + path.string());
    const std::string file = path.string();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Ctx c{file, lineno};
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        c.fail("<line>", e.what());
      }
      Demonstration demo = episode_from_json(j, c);
      if (demo.task_name != task) c.fail("task", "episode of task '" + demo.task_name + "' stored in file of task '" + task + "'");
      validate_demo(demo, c);
      auto [it, inserted] = id_origin.emplace(demo.id, file + ":" + std::to_string(lineno));
      if (!inserted) c.fail("id", "duplicate demonstration id '" + demo.id + "' (first seen at " + it->second + ")");
      d.demos.push_back(std::move(demo));
    }
  }
  std::sort(d.demos.begin(), d.demos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  spdlog::debug("loaded {} demonstrations from {}", d.demos.size(), root.string());
  return d;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
  validate_dataset(dataset);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw IoError("cannot create dataset directory " + root.string() + ": " + ec.message());

  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + p.string());
  };

  std::vector<std::string> tasks = dataset.tasks;
  for (const auto& demo : dataset.demos) {
    if (std::find(tasks.begin(), tasks.end(), demo.task_name) == tasks.end()) tasks.push_back(demo.task_name);
  }
  Dataset header = dataset;
  header.tasks = tasks;
  write(root / kManifestName, manifest_to_json(header).dump(2) + "\n");

  std::map<std::string, std::vector<const Demonstration*>> by_task;
  for (const auto& demo : dataset.demos) by_task[demo.task_name].push_back(&demo);
  for (const auto& task : tasks) {
    auto& demos = by_task[task];
    std::sort(demos.begin(), demos.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::string text;
    for (const auto* demo : demos) {
      text += episode_to_json(*demo).dump();
      text += '\n';
    }
    write(root / (task + ".jsonl"), text);
  }
}

std::string dataset_digest(const Dataset& dataset) {
  std::vector<const Demonstration*> demos;
  for (const auto& d : dataset.demos) demos.push_back(&d);
  std::sort(demos.begin(), demos.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::string canonical = manifest_to_json(dataset).dump();
  canonical += '\n';
  for (const auto* d : demos) {
    canonical += episode_to_json(*d).dump();
    canonical += '\n';
  }
  return sha256_hex(canonical);
}

}  // namespace xicm
