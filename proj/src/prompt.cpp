#include "xicm/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <regex>

#include "xicm/errors.hpp"

namespace xicm {

std::string system_prompt(const WorkspaceBounds& ws, int gripper_open_value) {
  const int top = ws.grid_resolution - 1;
  const int closed = 1 - gripper_open_value;
  std::string text;
  text += "You are a robot manipulation planner. Each example below maps a task description and the "
          "positions of the objects in the scene to the key-actions of a robot end-effector that "
          "complete the task.\n";
  text += "Positions are cells of a " + std::to_string(ws.grid_resolution) + "x" +
          std::to_string(ws.grid_resolution) + "x" + std::to_string(ws.grid_resolution) +
          " grid over the workspace: x, y and z are integers from 0 to " + std::to_string(top) + ".\n";
  text += "Roll, pitch and yaw are orientation bins of 5 degrees each: integers from 0 to 71.\n";
  text += "Gripper is " + std::to_string(gripper_open_value) + " for open and " + std::to_string(closed) +
          " for closed.\n";
  text += "Each key-action is written as [x, y, z, roll, pitch, yaw, gripper].\n";
  text += "Answer for the last task only: write its key-actions, one bracketed action per line, and nothing else.";
  return text;
}

std::string textualize_object(const QuantizedObject& o) {
  return o.name + ": [" + std::to_string(o.grid[0]) + ", " + std::to_string(o.grid[1]) + ", " +
         std::to_string(o.grid[2]) + "]";
}

std::string textualize_action(const QuantizedPose& a) {
  std::string s = "[";
  auto c = a.components();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(c[i]);
  }
  s += "]";
  return s;
}

std::string textualize_objects_line(const std::vector<QuantizedObject>& objects) {
  std::string s = "Objects: ";
  if (objects.empty()) return s + std::string(kNoObjectsToken);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i) s += "; ";
    s += textualize_object(objects[i]);
  }
  return s;
}

std::string textualize_query(std::string_view language, const std::vector<QuantizedObject>& objects) {
  std::string s = "Task: ";
  s += language;
  s += '\n';
  s += textualize_objects_line(objects);
  s += "\nActions:";
  return s;
}

std::string textualize_demo(const DemoBlock& block) {
  std::string s = textualize_query(block.language, block.objects);
  for (const auto& a : block.actions) {
    s += '\n';
    s += textualize_action(a);
  }
  return s;
}

std::string PromptBundle::user_text() const {
  std::string s;
  for (const auto& b : demo_blocks) {
    s += textualize_demo(b);
    s += "\n\n";
  }
  s += textualize_query(query_language, query_objects);
  s += '\n';
  return s;
}

std::string render_prompt(const PromptBundle& bundle) {
  return bundle.system_text + "\n\n" + bundle.user_text();
}

PromptBundle build_prompt(const std::vector<SelectedDemo>& selected, std::string_view query_language,
                          const std::vector<ObjectRecord>& query_objects, const WorkspaceBounds& ws,
                          int gripper_open_value) {
  if (selected.empty()) throw Error("cannot build a prompt from an empty selection");
  PromptBundle p;
  p.system_text = system_prompt(ws, gripper_open_value);
  for (const auto& s : selected) {
    if (s.demo == nullptr) throw Error("selected demonstration is null");
    DemoBlock b;
    b.demo_id = s.demo->id;
    b.language = s.demo->language;
    b.similarity = s.similarity;
    for (const auto& o : s.demo->objects) b.objects.push_back(quantize_object(o, ws));
    for (const auto& k : s.keyframes.keyframes) {
      QuantizedPose q = quantize_pose(k.action, ws);
      if (gripper_open_value == 0) q.gripper = 1 - q.gripper;
      b.actions.push_back(q);
    }
    if (b.actions.empty()) throw Error("demonstration '" + b.demo_id + "' has no key-actions");
    p.demo_blocks.push_back(std::move(b));
  }
  std::sort(p.demo_blocks.begin(), p.demo_blocks.end(), [](const DemoBlock& a, const DemoBlock& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.demo_id < b.demo_id;
  });
  p.query_language = std::string(query_language);
  for (const auto& o : query_objects) p.query_objects.push_back(quantize_object(o, ws));
  p.rendered = render_prompt(p);
  return p;
}

ActionPrediction parse_prediction(std::string_view text, int grid_resolution) {
  static const std::regex kAction([] {
    const std::string num = R"(\s*([+-]?\d+)\s*)";
    std::string pat = R"(\[)";
    for (int i = 0; i < 7; ++i) pat += (i ? "," : "") + num;
    return pat + R"(\])";
  }());
  static const char* kNames[7] = {"x", "y", "z", "roll", "pitch", "yaw", "gripper"};

  ActionPrediction out;
  out.raw_text = std::string(text);
  const std::string& s = out.raw_text;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kAction); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::array<int, 7> c{};
    for (int i = 0; i < 7; ++i) {
      const int hi = i < 3 ? grid_resolution - 1 : (i < 6 ? kAngleBins - 1 : 1);
      std::string tok = m[i + 1].str();
      const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
      long long v = 0;
      auto res = std::from_chars(first, tok.data() + tok.size(), v);
      if (res.ec == std::errc::result_out_of_range)
        v = tok[0] == '-' ? std::numeric_limits<long long>::min() : std::numeric_limits<long long>::max();
      long long clamped = std::clamp<long long>(v, 0, hi);
      if (clamped != v) {
        out.parse_warnings.push_back("action " + std::to_string(out.actions.size()) + ": " + kNames[i] + " " +
                                     tok + " clamped to " + std::to_string(clamped));
      }
      c[static_cast<std::size_t>(i)] = static_cast<int>(clamped);
    }
    out.actions.push_back(QuantizedPose::from_components(c));
  }
  if (out.actions.empty()) throw NoActionsFound();
  return out;
}

}  // namespace xicm
