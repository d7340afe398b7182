#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xicm/discretizer.hpp"
#include "xicm/keyframes.hpp"
#include "xicm/types.hpp"

namespace xicm {

/// Bumped whenever a byte of the rendered prompt changes.
inline constexpr std::string_view kPromptTemplateVersion = "xicm-prompt-v1";
inline constexpr std::string_view kNoObjectsToken = "(no objects)";

struct DemoBlock {
  std::string demo_id;
  std::string language;
  std::vector<QuantizedObject> objects;
  std::vector<QuantizedPose> actions;
  double similarity = 0.0;
  bool operator==(const DemoBlock&) const = default;
};

struct PromptBundle {
  std::string system_text;
  std::vector<DemoBlock> demo_blocks;  // similarity descending, id ascending on ties
  std::string query_language;
  std::vector<QuantizedObject> query_objects;
  std::string rendered;

  /// Everything after the system text: what goes into the user message.
  std::string user_text() const;
};

/// A retrieved demonstration and its score against the query.
struct SelectedDemo {
  const Demonstration* demo = nullptr;
  KeyActionSequence keyframes;
  double similarity = 0.0;
};

struct ActionPrediction {
  std::vector<QuantizedPose> actions;
  std::string raw_text;
  std::vector<std::string> parse_warnings;
};

std::string system_prompt(const WorkspaceBounds& ws, int gripper_open_value = 1);

std::string textualize_object(const QuantizedObject& o);
std::string textualize_action(const QuantizedPose& a);
std::string textualize_objects_line(const std::vector<QuantizedObject>& objects);
std::string textualize_demo(const DemoBlock& block);
std::string textualize_query(std::string_view language, const std::vector<QuantizedObject>& objects);

/// Re-renders `rendered` from the other fields.
std::string render_prompt(const PromptBundle& bundle);

/// Quantizes objects and key-actions of every selected demonstration, orders
/// the blocks by similarity and renders system text, blocks and query.
/// Throws Error on an empty selection.
PromptBundle build_prompt(const std::vector<SelectedDemo>& selected, std::string_view query_language,
                          const std::vector<ObjectRecord>& query_objects, const WorkspaceBounds& ws,
                          int gripper_open_value = 1);

/// Extracts every `[a, b, c, d, e, f, g]` integer group in order of
/// appearance. Components out of range are clamped and reported in
/// parse_warnings. Throws NoActionsFound when nothing parses.
ActionPrediction parse_prediction(std::string_view text, int grid_resolution = 100);

}  // namespace xicm
